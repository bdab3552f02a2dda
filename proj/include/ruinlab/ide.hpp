#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ruinlab/model.hpp"

namespace ruinlab {

/// One regime's candidate solution on u > 0. On the non-positive axis it is
/// the constant `below`: 0 for a survival probability, 1 for a ruin
/// probability. `d3f` is only needed by the third-order ODE checks.
struct Candidate {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  std::function<double(double)> d3f;
  double below = 0.0;
  /// Points in (0, inf) where f is not smooth (quadrature panel edges).
  std::vector<double> breaks;

  double value(double y) const { return y <= 0.0 ? below : f(y); }
};

/// Candidate for every regime.
using SmoothCandidate = std::vector<Candidate>;

/// P(y) exp(-rate y) on y > 0, a closed family under differentiation.
class PolyExp {
 public:
  PolyExp(std::vector<double> coeffs, double rate) : coeffs_(std::move(coeffs)), rate_(rate) {}

  double operator()(double y) const;
  PolyExp derivative() const;
  Candidate candidate(double below = 0.0) const;

 private:
  std::vector<double> coeffs_;  ///< ascending powers
  double rate_;
};

struct QuadratureOptions {
  int nodes = 64;
  /// Recompute with twice the nodes and fail if the results differ by more
  /// than `tolerance`.
  bool check_doubling = true;
  double tolerance = 1e-9;
  /// Upward jumps beyond the point where the tail mass drops below this are
  /// dropped; the dropped mass is reported.
  double tail_mass = 1e-14;
};

struct JumpOperatorValue {
  double value = 0.0;
  /// Jump mass dropped by truncating the upward side (times sup|f| bounds
  /// the truncation error).
  double truncated_mass = 0.0;
  /// |I_n - I_2n| when doubling was checked.
  double doubling_gap = 0.0;
};

/// alpha * int (f(u + x) - f(u)) F(dx). Throws std::invalid_argument for
/// u <= 0 and NumericalError when node doubling disagrees.
JumpOperatorValue jump_operator_detailed(const Candidate& f, double u, const BusinessParams& business,
                                         const QuadratureOptions& options = {});

double jump_operator(const Candidate& f, double u, const BusinessParams& business,
                     const QuadratureOptions& options = {});

/// Left-hand side of the integro-differential system, one entry per regime:
/// sigma_i^2 u^2 f_i''/2 + (a_i u + c) f_i' + I(f_i)(u) + sum_j lambda_ij f_j(u).
std::vector<double> ide_residual(const SmoothCandidate& candidate, double u, const ModelConfig& config,
                                 const QuadratureOptions& options = {});

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// For exponential claims with mean mu and one jump direction s (+1 up, -1
/// down): lhs is the central difference of u -> I(f)(u), rhs is
/// s I(f)(u) / mu - alpha f'(u).
IdentityCheck exp_derivative_identity_check(const Candidate& f, double u, const BusinessParams& business,
                                            double fd_step = 1e-4, const QuadratureOptions& options = {});

/// Cubic Hermite interpolation of grid values and slopes; second derivative
/// linear between nodes. Values left of the first node are held constant at
/// the first node's value, and likewise right of the last node.
Candidate candidate_from_grid(std::vector<double> u, std::vector<double> value, std::vector<double> slope,
                              std::vector<double> curvature, double below);

}  // namespace ruinlab
