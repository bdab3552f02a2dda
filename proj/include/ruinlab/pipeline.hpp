#pragma once

#include <cstdint>
#include <vector>

#include "ruinlab/model.hpp"
#include "ruinlab/ode_exp.hpp"
#include "ruinlab/path_sim.hpp"
#include "ruinlab/validation.hpp"

namespace ruinlab {

// Monte Carlo anchored BVP solve checked against a second, independent
// Monte Carlo run. Exponential claims with one jump direction only.

struct CrossValidationOptions {
  double u_min = 0.25;
  double u_max = 12.0;
  /// psi'(u_min) is the central difference over u_min -/+ this step.
  double slope_step = 0.05;
  std::int64_t anchor_paths = 100000;
  std::uint64_t anchor_seed = 1;
  std::vector<double> check_u{1.0, 2.0, 4.0};
  std::int64_t check_paths = 100000;
  std::uint64_t check_seed = 2;
  /// Both runs simulate to the last horizon; earlier ones feed the
  /// convergence flags.
  std::vector<double> horizons{500.0, 1000.0, 2000.0};
  /// Uniform grid evaluated inside the anchor run for the smoothness check;
  /// empty disables it.
  double smooth_start = 0.3;
  double smooth_spacing = 0.1;
  int smooth_points = 28;
  unsigned workers = 0;
  BvpOptions bvp;
};

struct CrossValidationResult {
  std::vector<BvpAnchor> anchors;
  /// std errors of psi(u_min) and psi(u_max) per regime
  std::vector<double> anchor_err_min, anchor_err_max;
  SolutionGrid solution;
  /// [regime] estimates at check_u and the last horizon
  std::vector<std::vector<RuinEstimate>> check;
  /// [regime][check point] horizon convergence flag
  std::vector<std::vector<bool>> converged;
  ComparisonReport comparison;  ///< a = Monte Carlo, b = BVP
  std::vector<SmoothnessReport> smoothness;  ///< per regime
  double anchor_seconds = 0.0;
  double check_seconds = 0.0;
};

CrossValidationResult cross_validate(const ModelConfig& config, const CrossValidationOptions& options);

}  // namespace ruinlab
