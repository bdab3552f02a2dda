#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ruinlab/model.hpp"
#include "ruinlab/rng.hpp"

namespace ruinlab {

struct RegimeJump {
  double time;
  int state;
};

/// Piecewise constant, right-continuous trajectory of the regime process on
/// [0, horizon]. jumps()[0] is (0, initial state).
class RegimePath {
 public:
  RegimePath(int initial_state, double horizon);

  int initial_state() const noexcept { return jumps_.front().state; }
  double horizon() const noexcept { return horizon_; }
  const std::vector<RegimeJump>& jumps() const noexcept { return jumps_; }
  std::size_t jump_count() const noexcept { return jumps_.size() - 1; }

  /// State at time t in [0, horizon].
  int state_at(double t) const;
  /// Index of the last jump at or before t.
  std::size_t segment_at(double t) const;

  /// Appends a jump; times must increase and the state must change.
  void push(double time, int state);
  void extend_horizon(double horizon);
  void reset(int initial_state, double horizon);

  /// `tau,state` rows, one per jump including the initial one.
  std::string to_csv() const;

 private:
  std::vector<RegimeJump> jumps_;
  double horizon_;
};

/// P[k][l] = lambda_kl / lambda_k off the diagonal. K = 1 gives the
/// absorbing sentinel.
EmbeddedChain embedded_chain(const GeneratorMatrix& q);

/// Extends a regime path forward in time. Draws, in order: a holding time,
/// then (only if the jump falls inside the horizon) the next state, and so on.
/// Extending in several calls consumes the stream exactly like one call.
class RegimeSampler {
 public:
  RegimeSampler(const EmbeddedChain& chain, int initial_state);

  void reset(int initial_state);
  void extend_to(double horizon, Engine& rng);
  const RegimePath& path() const noexcept { return path_; }

 private:
  int next_state(int from, Engine& rng) const;

  const EmbeddedChain* chain_;
  RegimePath path_;
  double pending_ = 0.0;
  bool has_pending_ = false;
};

RegimePath sample_regime_path(const GeneratorMatrix& q, int initial_state, double horizon, Engine& rng);

struct CompensatorCounts {
  std::int64_t jumps_into = 0;
  double compensator = 0.0;
};

/// N_k: jumps landing in k on (0, horizon]; A_k: integral over [0, horizon]
/// of 1{theta_s != k} lambda_{theta_s, k} ds.
CompensatorCounts compensator_counts(const RegimePath& path, const GeneratorMatrix& q, int k);

}  // namespace ruinlab
