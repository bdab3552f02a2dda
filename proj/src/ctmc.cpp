#include "ruinlab/ctmc.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ruinlab {

RegimePath::RegimePath(int initial_state, double horizon) : jumps_{{0.0, initial_state}}, horizon_(horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("RegimePath: horizon must be positive");
}

std::size_t RegimePath::segment_at(double t) const {
  auto it = std::upper_bound(jumps_.begin(), jumps_.end(), t,
                             [](double value, const RegimeJump& j) { return value < j.time; });
  return static_cast<std::size_t>(std::distance(jumps_.begin(), it)) - 1;
}

int RegimePath::state_at(double t) const {
  if (t < 0.0 || t > horizon_) throw std::out_of_range("RegimePath::state_at outside [0, horizon]");
  return jumps_[segment_at(t)].state;
}

void RegimePath::push(double time, int state) {
  if (!(time > jumps_.back().time)) throw std::invalid_argument("RegimePath: jump times must increase");
  if (state == jumps_.back().state) throw std::invalid_argument("RegimePath: a jump must change the state");
  jumps_.push_back({time, state});
  if (time > horizon_) horizon_ = time;
}

void RegimePath::extend_horizon(double horizon) {
  if (horizon > horizon_) horizon_ = horizon;
}

void RegimePath::reset(int initial_state, double horizon) {
  jumps_.assign(1, {0.0, initial_state});
  horizon_ = horizon;
}

std::string RegimePath::to_csv() const {
  std::string out = "tau,state\n";
  char buf[64];
  for (const auto& j : jumps_) {
    std::snprintf(buf, sizeof buf, "%.17g,%d\n", j.time, j.state);
    out += buf;
  }
  return out;
}

EmbeddedChain embedded_chain(const GeneratorMatrix& q) {
  const int n = q.size();
  EmbeddedChain chain;
  if (n == 1) {
    chain.P = {{1.0}};
    chain.hold_rate = {0.0};
    chain.absorbing = true;
    return chain;
  }
  chain.P.assign(n, std::vector<double>(n, 0.0));
  chain.hold_rate.resize(n);
  for (int k = 0; k < n; ++k) {
    const double rate = q.hold_rate(k);
    chain.hold_rate[k] = rate;
    for (int l = 0; l < n; ++l)
      if (l != k) chain.P[k][l] = q(k, l) / rate;
  }
  return chain;
}

RegimeSampler::RegimeSampler(const EmbeddedChain& chain, int initial_state)
    : chain_(&chain), path_(initial_state, 1.0) {
  if (initial_state < 0 || initial_state >= static_cast<int>(chain.hold_rate.size()))
    throw std::out_of_range("RegimeSampler: initial state out of range");
  reset(initial_state);
}

void RegimeSampler::reset(int initial_state) {
  // The placeholder horizon is replaced by the first extend_to call.
  path_.reset(initial_state, std::numeric_limits<double>::min());
  has_pending_ = false;
}

int RegimeSampler::next_state(int from, Engine& rng) const {
  const auto& row = chain_->P[from];
  const double u = open_uniform(rng);
  double acc = 0.0;
  int last = from;
  for (int l = 0; l < static_cast<int>(row.size()); ++l) {
    if (l == from || row[l] <= 0.0) continue;
    acc += row[l];
    last = l;
    if (u < acc) return l;
  }
  return last;
}

void RegimeSampler::extend_to(double horizon, Engine& rng) {
  if (chain_->absorbing) {
    path_.extend_horizon(horizon);
    return;
  }
  for (;;) {
    if (!has_pending_) {
      const RegimeJump& last = path_.jumps().back();
      pending_ = last.time + exponential(rng, chain_->hold_rate[last.state]);
      has_pending_ = true;
    }
    if (pending_ > horizon) break;
    path_.push(pending_, next_state(path_.jumps().back().state, rng));
    has_pending_ = false;
  }
  path_.extend_horizon(horizon);
}

RegimePath sample_regime_path(const GeneratorMatrix& q, int initial_state, double horizon, Engine& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("sample_regime_path: horizon must be positive");
  const EmbeddedChain chain = embedded_chain(q);
  RegimeSampler sampler(chain, initial_state);
  sampler.extend_to(horizon, rng);
  return sampler.path();
}

CompensatorCounts compensator_counts(const RegimePath& path, const GeneratorMatrix& q, int k) {
  if (k < 0 || k >= q.size()) throw std::out_of_range("compensator_counts: state out of range");
  CompensatorCounts out;
  const auto& jumps = path.jumps();
  for (std::size_t n = 0; n < jumps.size(); ++n) {
    const double start = jumps[n].time;
    if (start > path.horizon()) break;
    const double end = n + 1 < jumps.size() ? std::min(jumps[n + 1].time, path.horizon()) : path.horizon();
    const int state = jumps[n].state;
    if (n > 0 && state == k) ++out.jumps_into;
    if (state != k) out.compensator += q(state, k) * (end - start);
  }
  return out;
}

}  // namespace ruinlab
