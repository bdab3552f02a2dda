#pragma once

#include <string>
#include <vector>

namespace ruinlab {

/// Ruin probability of the classical compound Poisson model with premium
/// rate c, claim rate alpha and exponential claims of mean mu. Returns 1 when
/// c <= alpha mu.
double cramer_lundberg_psi(double u, double c, double alpha, double mu);

/// One value with its Monte Carlo standard error (0 for solver output).
struct PointValue {
  double u = 0.0;
  int regime = 0;
  double value = 0.0;
  double std_err = 0.0;
};

struct ComparePoint {
  double u = 0.0;
  int regime = 0;
};

struct ComparisonRow {
  double u = 0.0;
  int regime = 0;
  double a = 0.0;
  double b = 0.0;
  double diff = 0.0;  ///< a - b
  double abs_diff = 0.0;
  double z = 0.0;  ///< diff over the combined standard error
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double max_abs_z = 0.0;
  bool pass(double threshold = 3.0) const { return max_abs_z <= threshold; }
};

/// Standard error used when both inputs are exact, so that z stays finite.
inline constexpr double kExactErrorFloor = 1e-15;

/// Matches points by regime and u (relative tolerance 1e-9). Throws
/// std::invalid_argument on an empty point list or a point missing from
/// either input.
ComparisonReport compare(const std::vector<PointValue>& a, const std::vector<PointValue>& b,
                         const std::vector<ComparePoint>& points);

enum class SmoothnessVerdict { ConsistentWithC2, Inconsistent, InconclusiveNoise };

std::string to_string(SmoothnessVerdict v);

struct SmoothnessInput {
  std::vector<double> u;  ///< uniform spacing
  std::vector<double> psi;
  std::vector<double> std_err;
  /// Paths behind each estimate; with `nested` set, the estimates come from
  /// common random numbers with ruin events nested in u, and the covariance
  /// of two estimates is (min(psi_k, psi_l) - psi_k psi_l) / n_paths.
  long n_paths = 0;
  bool nested = false;
};

struct SmoothnessReport {
  double spacing = 0.0;
  std::vector<double> u_fine;
  std::vector<double> d1;       ///< first central differences at spacing
  std::vector<double> d2_fine;  ///< second differences at spacing
  std::vector<double> u_common;
  std::vector<double> d2_coarse;  ///< second differences at twice the spacing, on u_common
  std::vector<double> z;          ///< (fine - coarse) / sd on u_common
  double mean_curvature = 0.0;
  double mean_curvature_z = 0.0;  ///< infinite when the input carries no noise
  double z_threshold = 0.0;       ///< Bonferroni bound at 1% family-wise
  double max_abs_z = 0.0;
  bool noise_free = false;
  SmoothnessVerdict verdict = SmoothnessVerdict::InconclusiveNoise;
  std::string summary;
};

/// Compares second finite differences at spacing and twice the spacing.
/// A consistency check with C^2 smoothness only: estimates whose mean second
/// difference is within 3 standard errors of zero are reported as
/// noise-dominated. Throws std::invalid_argument for fewer than 5 points or
/// a non-uniform grid.
SmoothnessReport smoothness_diagnostic(const SmoothnessInput& input);

}  // namespace ruinlab
