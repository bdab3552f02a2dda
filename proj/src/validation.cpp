#include "ruinlab/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace ruinlab {

double cramer_lundberg_psi(double u, double c, double alpha, double mu) {
  if (!(c > 0.0) || !(alpha > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("cramer_lundberg_psi: requires c, alpha, mu > 0");
  if (!(u >= 0.0)) throw std::invalid_argument("cramer_lundberg_psi: requires u >= 0");
  if (c <= alpha * mu) return 1.0;
  return alpha * mu / c * std::exp(-(1.0 / mu - alpha / c) * u);
}

namespace {

bool same_u(double x, double y) { return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}); }

const PointValue& find_point(const std::vector<PointValue>& values, const ComparePoint& p, const char* side) {
  for (const auto& v : values)
    if (v.regime == p.regime && same_u(v.u, p.u)) return v;
  char buf[128];
  std::snprintf(buf, sizeof buf, "compare: point (u=%g, regime=%d) missing from input %s", p.u, p.regime, side);
  throw std::invalid_argument(buf);
}

}  // namespace

ComparisonReport compare(const std::vector<PointValue>& a, const std::vector<PointValue>& b,
                         const std::vector<ComparePoint>& points) {
  if (points.empty()) throw std::invalid_argument("compare: empty point list");
  ComparisonReport report;
  for (const auto& p : points) {
    const PointValue& va = find_point(a, p, "a");
    const PointValue& vb = find_point(b, p, "b");
    ComparisonRow row;
    row.u = p.u;
    row.regime = p.regime;
    row.a = va.value;
    row.b = vb.value;
    row.diff = va.value - vb.value;
    row.abs_diff = std::abs(row.diff);
    const double se = std::hypot(va.std_err, vb.std_err);
    row.z = row.diff / (se > 0.0 ? se : kExactErrorFloor);
    report.max_abs_z = std::max(report.max_abs_z, std::abs(row.z));
    report.rows.push_back(row);
  }
  return report;
}

std::string to_string(SmoothnessVerdict v) {
  switch (v) {
    case SmoothnessVerdict::ConsistentWithC2: return "consistent-with-C2";
    case SmoothnessVerdict::Inconsistent: return "inconsistent";
    case SmoothnessVerdict::InconclusiveNoise: return "inconclusive: noise-dominated";
  }
  return "?";
}

SmoothnessReport smoothness_diagnostic(const SmoothnessInput& in) {
  const std::size_t n = in.u.size();
  if (n < 5) throw std::invalid_argument("smoothness_diagnostic: grid too coarse (need at least 5 points)");
  if (in.psi.size() != n || in.std_err.size() != n)
    throw std::invalid_argument("smoothness_diagnostic: u, psi and std_err must have equal length");
  const double delta = in.u[1] - in.u[0];
  if (!(delta > 0.0)) throw std::invalid_argument("smoothness_diagnostic: grid must increase");
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(in.u[k] - in.u[k - 1] - delta) > 1e-9 * std::max(1.0, std::abs(in.u[k])))
      throw std::invalid_argument("smoothness_diagnostic: grid spacing must be uniform");

  std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
  bool noise_free = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      double c = 0.0;
      if (in.nested && in.n_paths > 0)
        c = (std::min(in.psi[k], in.psi[l]) - in.psi[k] * in.psi[l]) / static_cast<double>(in.n_paths);
      else if (k == l)
        c = in.std_err[k] * in.std_err[k];
      cov[k][l] = c;
      if (c != 0.0) noise_free = false;
    }
  auto combo = [&](const std::vector<double>& w) {
    double value = 0.0;
    for (std::size_t k = 0; k < n; ++k) value += w[k] * in.psi[k];
    return value;
  };
  auto variance = [&](const std::vector<double>& w) {
    double v = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (w[k] != 0.0)
        for (std::size_t l = 0; l < n; ++l) v += w[k] * w[l] * cov[k][l];
    return std::max(v, 0.0);
  };

  SmoothnessReport r;
  r.spacing = delta;
  r.noise_free = noise_free;
  const double d2 = delta * delta;
  std::vector<double> mean_w(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    r.u_fine.push_back(in.u[k]);
    r.d1.push_back((in.psi[k + 1] - in.psi[k - 1]) / (2.0 * delta));
    r.d2_fine.push_back((in.psi[k - 1] - 2.0 * in.psi[k] + in.psi[k + 1]) / d2);
    const double m = static_cast<double>(n - 2);
    mean_w[k - 1] += 1.0 / (m * d2);
    mean_w[k] -= 2.0 / (m * d2);
    mean_w[k + 1] += 1.0 / (m * d2);
  }
  r.mean_curvature = combo(mean_w);
  const double mean_sd = std::sqrt(variance(mean_w));
  r.mean_curvature_z = mean_sd > 0.0 ? std::abs(r.mean_curvature) / mean_sd : std::numeric_limits<double>::infinity();

  // Deterministic inputs: the fine-minus-coarse gap is -psi'''' delta^2 / 4
  // to leading order. The fourth-derivative scale is four times the median
  // fourth difference, so an isolated kink does not set its own tolerance.
  double tol = 0.0;
  if (noise_free) {
    std::vector<double> fourth;
    double s_max = 0.0;
    for (std::size_t k = 2; k + 2 < n; ++k)
      fourth.push_back(std::abs(in.psi[k - 2] - 4.0 * in.psi[k - 1] + 6.0 * in.psi[k] - 4.0 * in.psi[k + 1] +
                                in.psi[k + 2]) /
                       (d2 * d2));
    auto mid = fourth.begin() + static_cast<std::ptrdiff_t>(fourth.size() / 2);
    std::nth_element(fourth.begin(), mid, fourth.end());
    const double m4 = 4.0 * *mid;
    for (double s : r.d2_fine) s_max = std::max(s_max, std::abs(s));
    tol = 0.5 * d2 * m4 + 1e-8 * (1.0 + s_max);
  }

  for (std::size_t k = 2; k + 2 < n; ++k) {
    std::vector<double> w(n, 0.0);
    w[k - 1] += 1.0 / d2;
    w[k] -= 2.0 / d2;
    w[k + 1] += 1.0 / d2;
    w[k - 2] -= 1.0 / (4.0 * d2);
    w[k] += 2.0 / (4.0 * d2);
    w[k + 2] -= 1.0 / (4.0 * d2);
    const double coarse = (in.psi[k - 2] - 2.0 * in.psi[k] + in.psi[k + 2]) / (4.0 * d2);
    const double gap = combo(w);
    const double scale = noise_free ? tol : std::sqrt(variance(w));
    r.u_common.push_back(in.u[k]);
    r.d2_coarse.push_back(coarse);
    r.z.push_back(gap == 0.0 ? 0.0 : (scale > 0.0 ? gap / scale : std::numeric_limits<double>::infinity()));
    r.max_abs_z = std::max(r.max_abs_z, std::abs(r.z.back()));
  }

  const double m = static_cast<double>(r.z.size());
  if (noise_free) {
    r.z_threshold = 1.0;
  } else {
    const boost::math::normal standard;
    r.z_threshold = boost::math::quantile(boost::math::complement(standard, 0.01 / (2.0 * m)));
  }

  char buf[256];
  if (!noise_free && r.mean_curvature_z < 3.0) {
    r.verdict = SmoothnessVerdict::InconclusiveNoise;
    std::snprintf(buf, sizeof buf, "consistency check: inconclusive: noise-dominated (mean curvature z = %.3g < 3)",
                  r.mean_curvature_z);
  } else if (r.max_abs_z <= r.z_threshold) {
    r.verdict = SmoothnessVerdict::ConsistentWithC2;
    std::snprintf(buf, sizeof buf,
                  "consistency check: second differences at spacing %g and %g agree (max |z| = %.3g <= %.3g); "
                  "consistent-with-C2",
                  delta, 2.0 * delta, r.max_abs_z, r.z_threshold);
  } else {
    r.verdict = SmoothnessVerdict::Inconsistent;
    std::snprintf(buf, sizeof buf,
                  "consistency check: second differences at spacing %g and %g disagree (max |z| = %.3g > %.3g)", delta,
                  2.0 * delta, r.max_abs_z, r.z_threshold);
  }
  r.summary = buf;
  return r;
}

}  // namespace ruinlab
