#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ruinlab/ide.hpp"
#include "ruinlab/model.hpp"

namespace ruinlab {

// Third-order reduction of the integro-differential system for exponential
// claims with mean mu. With s = +1 for upward jumps and s = -1 for downward
// jumps, I(f)' = s I(f) / mu - alpha f', so D := mu G' - s G eliminates the
// integral term (G is the IDE left-hand side). Expanding D and dividing by
// mu sigma_i^2 u^2 / 2 gives
//
//   psi_i''' - p_i psi_i'' + q_i psi_i'
//     + 2 / (sigma_i^2 u^2) sum_j lambda_ij psi_j'
//     - s 2 / (mu sigma_i^2 u^2) sum_j lambda_ij psi_j = 0,
//
//   p_i = s / mu - 2 (1 + a_i / sigma_i^2) / u - 2 c / (sigma_i^2 u^2),
//   q_i = -s 2 a_i / (mu sigma_i^2 u) + (a_i - alpha - s c / mu) 2 / (sigma_i^2 u^2).
//
// Hence D = (mu sigma_i^2 u^2 / 2) L3_i exactly, where L3_i is the left-hand
// side above.

struct OdeCoefficients {
  double p = 0.0;
  double q = 0.0;
};

/// Coefficients from raw parameters; `direction` is s above.
OdeCoefficients ode_coefficients(double a, double sigma, double c, double alpha, double mu, int direction, double u);

/// Throws std::invalid_argument for non-exponential or two-sided claims,
/// sigma_i = 0 or u <= 0.
OdeCoefficients ode_coefficients(int i, double u, const ModelConfig& config);

/// L3_i at u from the values and first derivatives of every regime and the
/// second and third derivatives of regime i.
double ode_residual(std::span<const double> psi, std::span<const double> psi_p, double psi_pp_i, double psi_ppp_i,
                    int i, double u, const ModelConfig& config);

struct EquivalenceSample {
  double u = 0.0;
  int regime = 0;
  double ide_side = 0.0;  ///< mu G' - s G, G' by central differences
  double ode_side = 0.0;  ///< (mu sigma_i^2 u^2 / 2) L3_i
  double relative_gap = 0.0;
};

std::vector<EquivalenceSample> equivalence_samples(const SmoothCandidate& f, std::span<const double> u_samples,
                                                   const ModelConfig& config, double fd_step = 1e-4);

/// Largest relative gap over samples and regimes; candidates need d3f.
double equivalence_check(const SmoothCandidate& f, std::span<const double> u_samples, const ModelConfig& config,
                         double fd_step = 1e-4);

/// Boundary data for one regime: psi(u_min), psi'(u_min), psi(u_max).
struct BvpAnchor {
  double psi_min = 0.0;
  double dpsi_min = 0.0;
  double psi_max = 0.0;
};

struct BvpOptions {
  int points = 400;
  /// Grid density grows like exp(-stretch s) towards u_min; 0 is uniform.
  double stretch = 6.0;
  int max_iterations = 8;
  double newton_tolerance = 1e-10;
  /// Optional right-hand side g_i(u) of L3_i = g_i (manufactured solutions).
  std::function<double(int, double)> forcing;
};

struct SolutionGrid {
  std::vector<double> u;
  /// [regime][node]
  std::vector<std::vector<double>> psi;
  std::vector<std::vector<double>> psi_p;
  std::vector<std::vector<double>> psi_pp;
  std::vector<BvpAnchor> anchors;
  /// max |L3_i - g_i| at the interval midpoints, from the collocation cubic.
  double max_residual = 0.0;
  double newton_residual = 0.0;
  int iterations = 0;
  /// psi_i non-increasing within 1e-6 for every regime.
  bool monotone = true;
};

/// Grid on [u_min, u_max] clustered towards u_min.
std::vector<double> bvp_grid(double u_min, double u_max, int points, double stretch);

/// Solves the 3K-dimensional first-order form by 4th-order Lobatto IIIA
/// (Hermite-Simpson) collocation. Throws NumericalError when the Newton
/// residual stays above tolerance or when psi leaves [-0.01, 1.01].
SolutionGrid solve_bvp(const ModelConfig& config, double u_min, double u_max, const std::vector<BvpAnchor>& anchors,
                       const BvpOptions& options = {});

/// Cubic Hermite interpolation of psi_i from grid values and slopes; throws
/// std::out_of_range outside the grid.
double solution_value(const SolutionGrid& grid, int regime, double u);

/// Options taken from config.numerics.
BvpOptions bvp_options(const ModelConfig& config);

}  // namespace ruinlab
