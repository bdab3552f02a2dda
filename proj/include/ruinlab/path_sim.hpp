#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ruinlab/ctmc.hpp"
#include "ruinlab/model.hpp"
#include "ruinlab/rng.hpp"

namespace ruinlab {

struct SegmentResult {
  double v1 = 0.0;
  /// Trapezoidal approximation of int_{t0}^{t1} exp(-(V_s - v0)) ds.
  double q = 0.0;
};

/// Called at every merged-grid point after t0 with (t, partial q).
using GridObserver = std::function<void(double, double)>;

/// Advances the log-price over [t0, t1] on the merged grid
/// {t0 + m h} U {regime switches}. Each sub-interval of length d in regime k
/// adds kappa_k d + sigma_k sqrt(d) Z. Pieces with sigma_k = 0 are integrated
/// in closed form; without an observer such a piece is taken in one step.
SegmentResult simulate_log_price_segment(const RegimePath& regimes, const RegimeParams& params, double t0,
                                         double t1, double v0, double h, PathStreams& rng,
                                         const GridObserver& observer = {});

struct PathOutcome {
  bool ruined = false;
  double ruin_time = 0.0;       ///< meaningful iff ruined
  double terminal_value = 0.0;  ///< meaningful iff !ruined
  std::int64_t claims_seen = 0;
};

/// Simulates X^{u,i} for every capital in u_list on one shared event stream.
/// Stream order per inter-claim segment: inter-arrival time, regime jumps up
/// to the segment end, claim size (events); Gaussian increments (diffusion).
std::vector<PathOutcome> simulate_path_coupled(const ModelConfig& config, std::span<const double> u_list,
                                               int initial_regime, double horizon, PathStreams& rng);

PathOutcome simulate_path(const ModelConfig& config, double u, int initial_regime, double horizon,
                          PathStreams& rng);

struct RuinEstimate {
  double u = 0.0;
  int i = 0;
  double horizon = 0.0;
  std::int64_t n_paths = 0;
  double psi_hat = 0.0;
  double std_err = 0.0;
  double h = 0.0;
};

/// Builds an estimate from a ruin count; std_err = sqrt(p (1 - p) / n).
RuinEstimate make_estimate(double u, int i, double horizon, std::int64_t n_paths, std::int64_t ruined, double h);

/// Ruin counts of n_paths coupled paths, for every capital and horizon.
struct RuinTable {
  std::vector<double> u;
  std::vector<double> horizons;
  std::int64_t n_paths = 0;
  std::vector<std::vector<std::int64_t>> ruined;  ///< [u index][horizon index]
};

/// Worker count from RUINLAB_THREADS (0 or unset: hardware concurrency).
unsigned default_workers();

/// Path p uses PathStreams(master_seed, p) and is simulated to the largest
/// horizon; counts are integer sums, so the table does not depend on the
/// number of workers.
RuinTable simulate_ruin_table(const ModelConfig& config, std::span<const double> u_list, int initial_regime,
                              std::span<const double> horizons, std::int64_t n_paths, std::uint64_t master_seed,
                              unsigned workers = 0);

/// Capitals u <= 0 are reported as psi_hat = 1, std_err = 0 without simulation.
std::vector<RuinEstimate> estimate_ruin(const ModelConfig& config, std::span<const double> u_list,
                                        int initial_regime, double horizon, std::int64_t n_paths,
                                        std::uint64_t master_seed, unsigned workers = 0);

struct HorizonDiagnostic {
  std::vector<RuinEstimate> estimates;  ///< one per horizon
  /// Last two estimates differ by less than one standard error.
  bool converged = false;
};

HorizonDiagnostic horizon_diagnostic(const ModelConfig& config, double u, int initial_regime,
                                     std::span<const double> horizons, std::int64_t n_paths,
                                     std::uint64_t master_seed, unsigned workers = 0);

/// Convergence flag of a table column sequence (shared by horizon_diagnostic).
bool horizon_converged(std::span<const RuinEstimate> by_horizon);

}  // namespace ruinlab
