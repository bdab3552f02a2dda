#include "ruinlab/path_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

namespace ruinlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integral of exp(-kappa s) over [0, d].
double deterministic_weight(double kappa, double d) { return kappa == 0.0 ? d : -std::expm1(-kappa * d) / kappa; }

template <class Observer>
SegmentResult advance_segment(const RegimePath& regimes, const RegimeParams& params, double t0, double t1, double v0,
                              double h, PathStreams& rng, Observer&& observe, bool observing) {
  const auto& jumps = regimes.jumps();
  std::size_t seg = regimes.segment_at(t0);
  double v = v0;
  double ev = 1.0;  // exp(-(v - v0))
  double q = 0.0;
  double cur = t0;
  double m = 1.0;
  double next_grid = t0 + h;
  while (cur < t1) {
    const int k = jumps[seg].state;
    const double next_switch = seg + 1 < jumps.size() ? jumps[seg + 1].time : kInf;
    const double sigma = params.sigma[k];
    const double kappa = params.kappa(k);
    if (sigma == 0.0 && !observing) {
      const double end = std::min(next_switch, t1);
      const double d = end - cur;
      q += ev * deterministic_weight(kappa, d);
      v += kappa * d;
      ev = std::exp(-(v - v0));
      cur = end;
      m = std::floor((cur - t0) / h) + 1.0;
      next_grid = t0 + m * h;
      if (next_grid <= cur) next_grid = t0 + (++m) * h;
    } else {
      const double end = std::min({next_grid, next_switch, t1});
      const double d = end - cur;
      double vn = v + kappa * d;
      if (sigma > 0.0) vn += sigma * std::sqrt(d) * rng.gaussian();
      const double en = std::exp(-(vn - v0));
      q += sigma > 0.0 ? 0.5 * d * (ev + en) : ev * deterministic_weight(kappa, d);
      v = vn;
      ev = en;
      cur = end;
      if (end == next_grid) next_grid = t0 + (++m) * h;
      if (observing) observe(cur, q);
    }
    if (cur >= next_switch) ++seg;
  }
  return {v, q};
}

double sample_jump(const JumpLaw& law, Engine& rng) {
  const ClaimLaw& c = law.law();
  const double sign = law.variant() == Variant::Annuity ? 1.0 : -1.0;
  switch (c.kind) {
    case ClaimKind::Exponential: return sign * c.mu * -std::log(open_uniform(rng));
    case ClaimKind::Gamma: return sign * std::gamma_distribution<double>(c.shape, c.scale)(rng);
    case ClaimKind::Uniform: return sign * (c.lo + (c.hi - c.lo) * open_uniform(rng));
    case ClaimKind::DoubleExponential: {
      const bool up = open_uniform(rng) < c.p_up;
      const double mean = up ? c.mu_up : c.mu_down;
      const double m = mean * -std::log(open_uniform(rng));
      return up ? m : -m;
    }
  }
  return 0.0;
}

}  // namespace

SegmentResult simulate_log_price_segment(const RegimePath& regimes, const RegimeParams& params, double t0,
                                         double t1, double v0, double h, PathStreams& rng,
                                         const GridObserver& observer) {
  if (!(h > 0.0)) throw std::invalid_argument("simulate_log_price_segment: step must be positive");
  if (!(t0 < t1)) throw std::invalid_argument("simulate_log_price_segment: requires t0 < t1");
  if (t0 < 0.0 || regimes.horizon() < t1)
    throw std::invalid_argument("simulate_log_price_segment: regime path does not cover [t0, t1]");
  return advance_segment(
      regimes, params, t0, t1, v0, h, rng, [&](double t, double q) { observer(t, q); }, static_cast<bool>(observer));
}

std::vector<PathOutcome> simulate_path_coupled(const ModelConfig& config, std::span<const double> u_list,
                                               int initial_regime, double horizon, PathStreams& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_path: horizon must be positive");
  for (double u : u_list)
    if (!(u > 0.0)) throw std::invalid_argument("simulate_path: initial capital must be positive");
  if (initial_regime < 0 || initial_regime >= config.regime_count())
    throw std::out_of_range("simulate_path: initial regime out of range");

  const BusinessParams& biz = config.business;
  const Numerics& num = config.numerics;
  const JumpLaw law(biz);
  const bool check_between = biz.c < 0.0;

  std::vector<PathOutcome> out(u_list.size());
  std::vector<double> x(u_list.begin(), u_list.end());
  std::vector<std::size_t> alive(u_list.size());
  for (std::size_t j = 0; j < alive.size(); ++j) alive[j] = j;

  RegimeSampler sampler(config.chain, initial_regime);
  std::vector<std::pair<double, double>> grid;
  double t = 0.0;
  while (!alive.empty()) {
    const double claim_time = t + exponential(rng.events, biz.alpha);
    const double end = std::min(claim_time, horizon);
    sampler.extend_to(end, rng.events);

    double smallest = kInf;
    for (std::size_t j : alive) smallest = std::min(smallest, x[j]);
    const bool far = num.far_field_level > 0.0 && smallest >= num.far_field_level;
    const double step = far ? num.far_field_step : num.mc_step;

    SegmentResult seg;
    if (end > t) {
      grid.clear();
      seg = advance_segment(
          sampler.path(), config.regimes, t, end, 0.0, step, rng,
          [&](double tg, double qg) { grid.emplace_back(tg, qg); }, check_between);
    }
    const double growth = std::exp(seg.v1);

    auto survivor = alive.begin();
    for (std::size_t j : alive) {
      if (check_between && x[j] + biz.c * seg.q <= 0.0) {
        // Y has the sign of x + c q(t), and q(t) increases along the grid.
        auto hit = std::find_if(grid.begin(), grid.end(), [&](const auto& g) { return x[j] + biz.c * g.second <= 0.0; });
        out[j].ruined = true;
        out[j].ruin_time = hit != grid.end() ? hit->first : end;
        continue;
      }
      x[j] = growth * (x[j] + biz.c * seg.q);
      *survivor++ = j;
    }
    alive.erase(survivor, alive.end());

    if (claim_time > horizon) {
      for (std::size_t j : alive) out[j].terminal_value = x[j];
      break;
    }

    const double jump = sample_jump(law, rng.events);
    survivor = alive.begin();
    for (std::size_t j : alive) {
      ++out[j].claims_seen;
      x[j] += jump;
      if (x[j] <= 0.0) {
        out[j].ruined = true;
        out[j].ruin_time = claim_time;
        continue;
      }
      *survivor++ = j;
    }
    alive.erase(survivor, alive.end());
    t = claim_time;
  }
  return out;
}

PathOutcome simulate_path(const ModelConfig& config, double u, int initial_regime, double horizon, PathStreams& rng) {
  const double caps[] = {u};
  return simulate_path_coupled(config, caps, initial_regime, horizon, rng).front();
}

RuinEstimate make_estimate(double u, int i, double horizon, std::int64_t n_paths, std::int64_t ruined, double h) {
  RuinEstimate e;
  e.u = u;
  e.i = i;
  e.horizon = horizon;
  e.n_paths = n_paths;
  e.h = h;
  e.psi_hat = static_cast<double>(ruined) / static_cast<double>(n_paths);
  e.std_err = std::sqrt(e.psi_hat * (1.0 - e.psi_hat) / static_cast<double>(n_paths));
  return e;
}

unsigned default_workers() {
  if (const char* env = std::getenv("RUINLAB_THREADS")) {
    char* endp = nullptr;
    const long v = std::strtol(env, &endp, 10);
    if (endp != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RuinTable simulate_ruin_table(const ModelConfig& config, std::span<const double> u_list, int initial_regime,
                              std::span<const double> horizons, std::int64_t n_paths, std::uint64_t master_seed,
                              unsigned workers) {
  if (n_paths < 1) throw std::invalid_argument("simulate_ruin_table: n_paths must be at least 1");
  if (horizons.empty()) throw std::invalid_argument("simulate_ruin_table: no horizons");
  for (std::size_t k = 1; k < horizons.size(); ++k)
    if (!(horizons[k] > horizons[k - 1])) throw std::invalid_argument("simulate_ruin_table: horizons must increase");

  RuinTable table;
  table.u.assign(u_list.begin(), u_list.end());
  table.horizons.assign(horizons.begin(), horizons.end());
  table.n_paths = n_paths;
  table.ruined.assign(u_list.size(), std::vector<std::int64_t>(horizons.size(), 0));

  std::vector<double> positive;
  std::vector<std::size_t> where;
  for (std::size_t j = 0; j < u_list.size(); ++j) {
    if (u_list[j] > 0.0) {
      positive.push_back(u_list[j]);
      where.push_back(j);
    } else {
      std::fill(table.ruined[j].begin(), table.ruined[j].end(), n_paths);
    }
  }
  if (positive.empty()) return table;

  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, n_paths));
  const double longest = horizons.back();

  using Counts = std::vector<std::vector<std::int64_t>>;
  std::vector<Counts> partial(workers, Counts(positive.size(), std::vector<std::int64_t>(horizons.size(), 0)));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      Counts& counts = partial[w];
      for (std::int64_t p = w; p < n_paths; p += workers) {
        PathStreams rng(master_seed, static_cast<std::uint64_t>(p));
        const auto outcomes = simulate_path_coupled(config, positive, initial_regime, longest, rng);
        for (std::size_t j = 0; j < outcomes.size(); ++j) {
          if (!outcomes[j].ruined) continue;
          for (std::size_t k = 0; k < horizons.size(); ++k)
            if (outcomes[j].ruin_time <= horizons[k]) ++counts[j][k];
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const Counts& counts : partial)
    for (std::size_t j = 0; j < positive.size(); ++j)
      for (std::size_t k = 0; k < horizons.size(); ++k) table.ruined[where[j]][k] += counts[j][k];
  return table;
}

std::vector<RuinEstimate> estimate_ruin(const ModelConfig& config, std::span<const double> u_list,
                                        int initial_regime, double horizon, std::int64_t n_paths,
                                        std::uint64_t master_seed, unsigned workers) {
  const double horizons[] = {horizon};
  const RuinTable table = simulate_ruin_table(config, u_list, initial_regime, horizons, n_paths, master_seed, workers);
  std::vector<RuinEstimate> out;
  for (std::size_t j = 0; j < table.u.size(); ++j) {
    RuinEstimate e = make_estimate(table.u[j], initial_regime, horizon, n_paths, table.ruined[j][0],
                                   config.numerics.mc_step);
    out.push_back(e);
  }
  return out;
}

bool horizon_converged(std::span<const RuinEstimate> by_horizon) {
  if (by_horizon.size() < 2) return false;
  const RuinEstimate& last = by_horizon[by_horizon.size() - 1];
  const RuinEstimate& prev = by_horizon[by_horizon.size() - 2];
  const double diff = std::abs(last.psi_hat - prev.psi_hat);
  return diff == 0.0 || diff < last.std_err;
}

HorizonDiagnostic horizon_diagnostic(const ModelConfig& config, double u, int initial_regime,
                                     std::span<const double> horizons, std::int64_t n_paths,
                                     std::uint64_t master_seed, unsigned workers) {
  const double caps[] = {u};
  const RuinTable table = simulate_ruin_table(config, caps, initial_regime, horizons, n_paths, master_seed, workers);
  HorizonDiagnostic diag;
  for (std::size_t k = 0; k < horizons.size(); ++k)
    diag.estimates.push_back(
        make_estimate(u, initial_regime, horizons[k], n_paths, table.ruined[0][k], config.numerics.mc_step));
  diag.converged = horizon_converged(diag.estimates);
  return diag;
}

}  // namespace ruinlab
