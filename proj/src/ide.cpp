#include "ruinlab/ide.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include <boost/math/interpolators/cubic_hermite.hpp>

#include "ruinlab/quadrature.hpp"

namespace ruinlab {

namespace {

double law_scale(const ClaimLaw& law) {
  switch (law.kind) {
    case ClaimKind::Exponential: return law.mu;
    case ClaimKind::Gamma: return law.scale * std::max(1.0, std::sqrt(law.shape));
    case ClaimKind::Uniform: return law.hi - law.lo;
    case ClaimKind::DoubleExponential: return std::min(law.mu_up, law.mu_down);
  }
  return 1.0;
}

// Smallest x >= start with P(jump > x) <= mass, by doubling then bisection.
double upper_truncation(const JumpLaw& law, double start, double scale, double mass) {
  if (std::isfinite(law.support_hi())) return law.support_hi();
  double hi = std::max(start, 0.0) + scale;
  while (law.upper_tail(hi) > mass) hi = 2.0 * hi + scale;
  double lo = std::max(start, 0.0);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (law.upper_tail(mid) > mass ? lo : hi) = mid;
  }
  return hi;
}

// int f(u + x) F(dx) over the jump support, with n-point panels.
double expected_after_jump(const Candidate& f, double u, const JumpLaw& law, double scale, double up_end, int n) {
  double total = 0.0;
  const double width = 8.0 * scale;
  if (law.has_down()) {
    // Jumps at or below -u land on the non-positive axis.
    total += f.below * law.cdf(-u);
    const double a = std::max(0.0, u + law.support_lo());
    const double b = u + std::min(0.0, law.support_hi());
    if (b > a) {
      std::vector<double> breaks = f.breaks;
      for (double k : law.kinks()) breaks.push_back(u + k);
      const auto cuts = panel_cuts(a, b, breaks, width);
      total += gauss_integrate_panels([&](double y) { return f.f(y) * law.density(y - u); }, cuts, n);
    }
  }
  if (law.has_up()) {
    const double a = std::max(0.0, law.support_lo());
    if (up_end > a) {
      std::vector<double> breaks = law.kinks();
      for (double k : f.breaks) breaks.push_back(k - u);
      const auto cuts = panel_cuts(a, up_end, breaks, width);
      total += gauss_integrate_panels([&](double x) { return f.f(u + x) * law.density(x); }, cuts, n);
    }
  }
  return total;
}

}  // namespace

double PolyExp::operator()(double y) const {
  double p = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) p = p * y + *it;
  return p * std::exp(-rate_ * y);
}

PolyExp PolyExp::derivative() const {
  // (P e^{-ry})' = (P' - r P) e^{-ry}
  std::vector<double> d(coeffs_.size(), 0.0);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    d[k] -= rate_ * coeffs_[k];
    if (k > 0) d[k - 1] += static_cast<double>(k) * coeffs_[k];
  }
  return PolyExp(std::move(d), rate_);
}

Candidate PolyExp::candidate(double below) const {
  const PolyExp d1 = derivative();
  const PolyExp d2 = d1.derivative();
  const PolyExp d3 = d2.derivative();
  Candidate c;
  c.f = *this;
  c.df = d1;
  c.d2f = d2;
  c.d3f = d3;
  c.below = below;
  return c;
}

JumpOperatorValue jump_operator_detailed(const Candidate& f, double u, const BusinessParams& business,
                                         const QuadratureOptions& options) {
  if (!(u > 0.0)) throw std::invalid_argument("jump_operator: requires u > 0");
  const JumpLaw law(business);
  const double scale = law_scale(business.claims);
  JumpOperatorValue out;
  double up_end = 0.0;
  if (law.has_up()) {
    up_end = upper_truncation(law, law.support_lo(), scale, options.tail_mass);
    out.truncated_mass = law.upper_tail(up_end);
  }
  const double coarse = expected_after_jump(f, u, law, scale, up_end, options.nodes);
  if (options.check_doubling) {
    const double fine = expected_after_jump(f, u, law, scale, up_end, 2 * options.nodes);
    out.doubling_gap = business.alpha * std::abs(fine - coarse);
    if (!(out.doubling_gap <= options.tolerance))
      throw NumericalError("jump_operator: node doubling changed the integral by " + std::to_string(out.doubling_gap) +
                           " at u = " + std::to_string(u));
  }
  out.value = business.alpha * (coarse - f.f(u));
  return out;
}

double jump_operator(const Candidate& f, double u, const BusinessParams& business, const QuadratureOptions& options) {
  return jump_operator_detailed(f, u, business, options).value;
}

std::vector<double> ide_residual(const SmoothCandidate& candidate, double u, const ModelConfig& config,
                                 const QuadratureOptions& options) {
  if (!(u > 0.0)) throw std::invalid_argument("ide_residual: requires u > 0");
  const int K = config.regime_count();
  if (static_cast<int>(candidate.size()) != K) throw std::invalid_argument("ide_residual: one candidate per regime");
  std::vector<double> values(K);
  for (int j = 0; j < K; ++j) values[j] = candidate[j].f(u);
  std::vector<double> out(K);
  const double c = config.business.c;
  for (int i = 0; i < K; ++i) {
    const double s = config.regimes.sigma[i];
    const double a = config.regimes.a[i];
    double r = 0.5 * s * s * u * u * candidate[i].d2f(u) + (a * u + c) * candidate[i].df(u);
    r += jump_operator(candidate[i], u, config.business, options);
    for (int j = 0; j < K; ++j) r += config.generator(i, j) * values[j];
    out[i] = r;
  }
  return out;
}

IdentityCheck exp_derivative_identity_check(const Candidate& f, double u, const BusinessParams& business,
                                            double fd_step, const QuadratureOptions& options) {
  if (!(u > 0.0)) throw std::invalid_argument("exp_derivative_identity_check: requires u > 0");
  if (!business.claims.is_exponential())
    throw std::invalid_argument("exp_derivative_identity_check: requires exponential claims");
  const int direction = jump_direction(business);
  if (direction == 0) throw std::invalid_argument("exp_derivative_identity_check: requires one-sided jumps");
  if (!(fd_step > 0.0) || !(u - fd_step > 0.0)) throw std::invalid_argument("exp_derivative_identity_check: bad step");
  const double plus = jump_operator(f, u + fd_step, business, options);
  const double minus = jump_operator(f, u - fd_step, business, options);
  const double centre = jump_operator(f, u, business, options);
  IdentityCheck out;
  out.lhs = (plus - minus) / (2.0 * fd_step);
  out.rhs = direction * centre / business.claims.mu - business.alpha * f.df(u);
  return out;
}

Candidate candidate_from_grid(std::vector<double> u, std::vector<double> value, std::vector<double> slope,
                              std::vector<double> curvature, double below) {
  const std::size_t n = u.size();
  if (n < 2 || value.size() != n || slope.size() != n || curvature.size() != n)
    throw std::invalid_argument("candidate_from_grid: need matching columns with at least two nodes");
  for (std::size_t k = 1; k < n; ++k)
    if (!(u[k] > u[k - 1])) throw std::invalid_argument("candidate_from_grid: grid must increase");
  if (!(u.front() > 0.0)) throw std::invalid_argument("candidate_from_grid: grid must lie in u > 0");

  using Spline = boost::math::interpolators::cubic_hermite<std::vector<double>>;
  const double u_lo = u.front();
  const double u_hi = u.back();
  const double v_lo = value.front();
  const double v_hi = value.back();
  auto grid = std::make_shared<const std::vector<double>>(u);
  auto d2 = std::make_shared<const std::vector<double>>(std::move(curvature));
  auto spline = std::make_shared<Spline>(std::move(u), std::move(value), std::move(slope));

  Candidate c;
  c.below = below;
  c.breaks = *grid;
  c.f = [=](double y) { return y <= u_lo ? v_lo : (y >= u_hi ? v_hi : (*spline)(y)); };
  c.df = [=](double y) { return (y < u_lo || y > u_hi) ? 0.0 : spline->prime(y); };
  c.d2f = [=](double y) {
    const auto& g = *grid;
    const auto& v = *d2;
    if (y <= g.front()) return v.front();
    if (y >= g.back()) return v.back();
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), y) - g.begin());
    const double w = (y - g[k - 1]) / (g[k] - g[k - 1]);
    return (1.0 - w) * v[k - 1] + w * v[k];
  };
  return c;
}

}  // namespace ruinlab
