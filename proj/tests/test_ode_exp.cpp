#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "ruinlab/errors.hpp"
#include "ruinlab/ode_exp.hpp"

using namespace ruinlab;

namespace {

// Same coefficients, put over the common denominator mu sigma^2 u^2.
OdeCoefficients reference_coefficients(double a, double sigma, double c, double alpha, double mu, int s, double u) {
  const double den = mu * sigma * sigma * u * u;
  const double p = (s * sigma * sigma * u * u - 2.0 * mu * (sigma * sigma + a) * u - 2.0 * mu * c) / den;
  const double q = (-2.0 * s * a * u + 2.0 * mu * (a - alpha) - 2.0 * s * c) / den;
  return {p, q};
}

Candidate zero_candidate() { return PolyExp({0.0}, 1.0).candidate(); }

}  // namespace

TEST_CASE("coefficients: hand-substituted examples") {
  // Upward-jump direction, the sign under which both examples are stated.
  const OdeCoefficients a = ode_coefficients(0.5, 1.0, 1.0, 1.0, 1.0, +1, 1.0);
  CHECK(a.p == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(a.q == doctest::Approx(-4.0).epsilon(1e-15));
  const OdeCoefficients b = ode_coefficients(0.0, 1.0, 1.0, 1.0, 1.0, +1, 1.0);
  CHECK(b.p == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(b.q == doctest::Approx(-4.0).epsilon(1e-15));

  // Downward jumps (claims reduce the reserve) flip the 1/mu terms.
  const OdeCoefficients d = ode_coefficients(0.5, 1.0, 1.0, 1.0, 1.0, -1, 1.0);
  CHECK(d.p == doctest::Approx(-6.0));
  CHECK(d.q == doctest::Approx(2.0));

  const ModelConfig cfg = testcfg::make(testcfg::one_regime_diffusive());
  const OdeCoefficients e = ode_coefficients(0, 1.0, cfg);
  CHECK(e.p == d.p);
  CHECK(e.q == d.q);
}

TEST_CASE("coefficients: limits for large capital") {
  for (int s : {-1, 1}) {
    const OdeCoefficients far = ode_coefficients(0.3, 0.7, 1.5, 1.0, 2.0, s, 1e9);
    CHECK(far.p == doctest::Approx(s / 2.0).epsilon(1e-8));
    CHECK(std::abs(far.q) < 1e-8);
  }
}

TEST_CASE("property: coefficients match an independent expression") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> a(-1.0, 1.0), sigma(0.05, 2.0), c(-3.0, 3.0), alpha(0.1, 5.0),
      mu(0.1, 4.0), u(0.01, 50.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int s = trial % 2 == 0 ? 1 : -1;
    const double pa = a(rng), ps = sigma(rng), pc = c(rng), pal = alpha(rng), pm = mu(rng), pu = u(rng);
    const OdeCoefficients got = ode_coefficients(pa, ps, pc, pal, pm, s, pu);
    const OdeCoefficients ref = reference_coefficients(pa, ps, pc, pal, pm, s, pu);
    worst = std::max(worst, std::abs(got.p - ref.p) / std::max(std::abs(ref.p), 1e-300));
    worst = std::max(worst, std::abs(got.q - ref.q) / std::max(std::abs(ref.q), 1e-300));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("coefficients: preconditions") {
  CHECK_THROWS_AS(ode_coefficients(0.5, 1.0, 1.0, 1.0, 1.0, -1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ode_coefficients(0.5, 0.0, 1.0, 1.0, 1.0, -1, 1.0), std::invalid_argument);

  const ModelConfig classical = testcfg::make(testcfg::classical());
  CHECK_THROWS_AS(ode_coefficients(0, 1.0, classical), std::invalid_argument);

  testcfg::Json g = testcfg::one_regime_diffusive();
  g["claims"] = {{"kind", "gamma"}, {"shape", 2.0}, {"scale", 0.5}};
  CHECK_THROWS_AS(ode_coefficients(0, 1.0, testcfg::make(g)), std::invalid_argument);

  testcfg::Json m = testcfg::one_regime_diffusive();
  m["variant"] = "Mixed";
  m["claims"] = {{"kind", "double_exponential"}, {"p_up", 0.5}, {"mu_up", 1.0}, {"mu_down", 1.0}};
  CHECK_THROWS_AS(ode_coefficients(0, 1.0, testcfg::make(m)), std::invalid_argument);
}

TEST_CASE("ode residual: zero inputs and linearity") {
  const ModelConfig cfg = testcfg::make(testcfg::two_regime());
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(ode_residual(zeros, zeros, 0.0, 0.0, 0, 1.0, cfg) == 0.0);
  CHECK(ode_residual(zeros, zeros, 0.0, 0.0, 1, 1.0, cfg) == 0.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(-1.0, 1.0), u(0.1, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> psi{v(rng), v(rng)}, dpsi{v(rng), v(rng)};
    const double d2 = v(rng), d3 = v(rng), at = u(rng);
    const int i = trial % 2;
    const double r1 = ode_residual(psi, dpsi, d2, d3, i, at, cfg);
    const std::vector<double> psi2{2 * psi[0], 2 * psi[1]}, dpsi2{2 * dpsi[0], 2 * dpsi[1]};
    const double r2 = ode_residual(psi2, dpsi2, 2 * d2, 2 * d3, i, at, cfg);
    CHECK(r2 == 2.0 * r1);
  }
  CHECK_THROWS_AS(ode_residual(zeros, zeros, 0.0, 0.0, 0, -1.0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(ode_residual(std::vector<double>{0.0}, zeros, 0.0, 0.0, 0, 1.0, cfg), std::invalid_argument);
}

TEST_CASE("equivalence: exp(-y) with one regime") {
  const ModelConfig cfg = testcfg::make(testcfg::one_regime_diffusive());
  const std::vector<double> u{0.5, 1.0, 2.0, 4.0};
  const SmoothCandidate f{PolyExp({1.0}, 1.0).candidate()};
  CHECK(equivalence_check(f, u, cfg) < 1e-5);

  const std::vector<EquivalenceSample> samples = equivalence_samples(f, u, cfg);
  REQUIRE(samples.size() == 4);
  for (const EquivalenceSample& s : samples) CHECK(std::abs(s.ide_side) > 1e-3);
}

TEST_CASE("equivalence: coupled two-regime family") {
  const ModelConfig cfg = testcfg::make(testcfg::two_regime());
  const std::vector<double> u{0.5, 1.0, 2.0, 4.0};
  const PolyExp y2({0.0, 0.0, 1.0}, 1.0);
  CHECK(equivalence_check({y2.candidate(), y2.candidate()}, u, cfg) < 1e-5);
  CHECK(equivalence_check({y2.candidate(), PolyExp({0.3, 1.0}, 0.4).candidate()}, u, cfg) < 1e-5);
  // Ruin-type candidates with value 1 below zero.
  CHECK(equivalence_check({PolyExp({0.6}, 0.5).candidate(1.0), PolyExp({0.4, 0.1}, 0.8).candidate(1.0)}, u, cfg) <
        1e-5);
}

TEST_CASE("equivalence: zero candidate") {
  const ModelConfig cfg = testcfg::make(testcfg::two_regime());
  const std::vector<double> u{0.5, 1.0, 2.0, 4.0};
  CHECK(equivalence_check({zero_candidate(), zero_candidate()}, u, cfg) == 0.0);
  for (const EquivalenceSample& s : equivalence_samples({zero_candidate(), zero_candidate()}, u, cfg)) {
    CHECK(s.ide_side == 0.0);
    CHECK(s.ode_side == 0.0);
  }
}

TEST_CASE("equivalence: preconditions") {
  const ModelConfig cfg = testcfg::make(testcfg::two_regime());
  const std::vector<double> u{1.0};
  CHECK_THROWS_AS(equivalence_check({zero_candidate()}, u, cfg), std::invalid_argument);
  Candidate no_d3 = zero_candidate();
  no_d3.d3f = nullptr;
  CHECK_THROWS_AS(equivalence_check({no_d3, no_d3}, u, cfg), std::invalid_argument);
  const std::vector<double> tiny{1e-5};
  CHECK_THROWS_AS(equivalence_check({zero_candidate(), zero_candidate()}, tiny, cfg), std::invalid_argument);
}

TEST_CASE("bvp grid is increasing and clustered at the left end") {
  const std::vector<double> g = bvp_grid(0.25, 12.0, 400, 6.0);
  REQUIRE(g.size() == 400);
  CHECK(g.front() == 0.25);
  CHECK(g.back() == 12.0);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] > g[k - 1]);
  CHECK(g[1] - g[0] < g[399] - g[398]);
  const std::vector<double> uniform = bvp_grid(1.0, 2.0, 11, 0.0);
  for (int k = 0; k < 11; ++k) CHECK(uniform[k] == doctest::Approx(1.0 + 0.1 * k));
  CHECK_THROWS_AS(bvp_grid(0.0, 1.0, 10, 6.0), std::invalid_argument);
  CHECK_THROWS_AS(bvp_grid(1.0, 1.0, 10, 6.0), std::invalid_argument);
}

TEST_CASE("bvp: manufactured solution is recovered") {
  const ModelConfig cfg = testcfg::make(testcfg::two_regime());
  const double amp[2] = {0.8, 0.6};
  const double rate[2] = {0.5, 0.3};
  auto d = [&](int j, int order, double u) { return amp[j] * std::pow(-rate[j], order) * std::exp(-rate[j] * u); };

  BvpOptions options;
  options.forcing = [&](int i, double u) {
    const std::vector<double> psi{d(0, 0, u), d(1, 0, u)}, dpsi{d(0, 1, u), d(1, 1, u)};
    return ode_residual(psi, dpsi, d(i, 2, u), d(i, 3, u), i, u, cfg);
  };
  const double u_min = 0.25, u_max = 12.0;
  std::vector<BvpAnchor> anchors;
  for (int j = 0; j < 2; ++j) anchors.push_back({d(j, 0, u_min), d(j, 1, u_min), d(j, 0, u_max)});

  const SolutionGrid g = solve_bvp(cfg, u_min, u_max, anchors, options);
  REQUIRE(g.u.size() == 400);
  double err = 0.0, err_p = 0.0;
  for (int j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < g.u.size(); ++k) {
      err = std::max(err, std::abs(g.psi[j][k] - d(j, 0, g.u[k])));
      err_p = std::max(err_p, std::abs(g.psi_p[j][k] - d(j, 1, g.u[k])));
    }
  CHECK(err < 1e-6);
  CHECK(err_p < 1e-5);
  CHECK(g.max_residual < 1e-6);
  CHECK(g.newton_residual <= 1e-10);
  CHECK(g.monotone);
  CHECK(std::abs(solution_value(g, 1, 3.3) - d(1, 0, 3.3)) < 1e-6);
  CHECK_THROWS_AS(solution_value(g, 0, 13.0), std::out_of_range);
}

TEST_CASE("bvp: zero anchors give the zero solution") {
  const ModelConfig cfg = testcfg::make(testcfg::two_regime());
  const SolutionGrid g = solve_bvp(cfg, 0.25, 12.0, {BvpAnchor{}, BvpAnchor{}});
  for (int j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < g.u.size(); ++k) {
      CHECK(g.psi[j][k] == 0.0);
      CHECK(g.psi_pp[j][k] == 0.0);
    }
  CHECK(g.max_residual == 0.0);
}

TEST_CASE("bvp: solution satisfies the ode between nodes") {
  // One regime, sigma = 1, a = 0.5, checked with finite differences of the
  // solved second derivative. Arbitrary anchors excite a fast mode of width
  // about sigma^2 u^2 / 2c at the left end; solving from 0.05 first and
  // re-anchoring at 0.25 leaves only the smooth part of the solution.
  const ModelConfig cfg = testcfg::make(testcfg::one_regime_diffusive());
  const SolutionGrid wide = solve_bvp(cfg, 0.05, 12.0, {BvpAnchor{0.6, -0.2, 0.02}});
  const double u0 = 0.25;
  auto at = [&](const std::vector<double>& col) {
    std::size_t k = 0;
    while (wide.u[k + 1] < u0) ++k;
    const double t = (u0 - wide.u[k]) / (wide.u[k + 1] - wide.u[k]);
    return (1 - t) * col[k] + t * col[k + 1];
  };
  const double psi0 = solution_value(wide, 0, u0);
  const SolutionGrid g = solve_bvp(cfg, u0, 12.0, {BvpAnchor{psi0, at(wide.psi_p[0]), 0.02}});
  CHECK(std::abs(solution_value(g, 0, 1.0) - solution_value(wide, 0, 1.0)) < 1e-4);
  CHECK(g.max_residual < 1e-6);
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < g.u.size(); ++k) {
    const double h0 = g.u[k] - g.u[k - 1], h1 = g.u[k + 1] - g.u[k];
    // Three-point derivative on a non-uniform grid.
    const double d3 = (-h1 / (h0 * (h0 + h1))) * g.psi_pp[0][k - 1] + ((h1 - h0) / (h0 * h1)) * g.psi_pp[0][k] +
                      (h0 / (h1 * (h0 + h1))) * g.psi_pp[0][k + 1];
    const std::vector<double> psi{g.psi[0][k]}, dpsi{g.psi_p[0][k]};
    worst = std::max(worst, std::abs(ode_residual(psi, dpsi, g.psi_pp[0][k], d3, 0, g.u[k], cfg)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("bvp: failures") {
  const ModelConfig cfg = testcfg::make(testcfg::two_regime());
  CHECK_THROWS_AS(solve_bvp(cfg, 0.25, 12.0, {BvpAnchor{}}), std::invalid_argument);
  CHECK_THROWS_AS(solve_bvp(cfg, 0.25, 12.0, {BvpAnchor{5.0, 0.0, 0.0}, BvpAnchor{}}), NumericalError);
  CHECK_THROWS_AS(solve_bvp(testcfg::make(testcfg::classical()), 0.25, 12.0, {BvpAnchor{}}), std::invalid_argument);
}

TEST_CASE("bvp options follow the config numerics") {
  testcfg::Json j = testcfg::two_regime();
  j["numerics"] = {{"bvp_points", 120}, {"bvp_stretch", 2.0}};
  const BvpOptions o = bvp_options(testcfg::make(j));
  CHECK(o.points == 120);
  CHECK(o.stretch == 2.0);
}
