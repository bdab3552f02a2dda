#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "ruinlab/validation.hpp"

using namespace ruinlab;

TEST_CASE("classical ruin probability") {
  CHECK(cramer_lundberg_psi(0.0, 2.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cramer_lundberg_psi(2.0, 2.0, 1.0, 1.0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-15));
  // alpha mu / c * exp(-(1/mu - alpha/c) u)
  CHECK(cramer_lundberg_psi(1.5, 3.0, 2.0, 0.5) == doctest::Approx(1.0 / 3.0 * std::exp(-(2.0 - 2.0 / 3.0) * 1.5)));
  CHECK(cramer_lundberg_psi(4.0, 1.0, 1.0, 1.0) == 1.0);
  CHECK(cramer_lundberg_psi(4.0, 0.5, 1.0, 1.0) == 1.0);
  CHECK_THROWS_AS(cramer_lundberg_psi(-1.0, 2.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("property: classical ruin probability is a decreasing probability") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> c(0.1, 5.0), alpha(0.1, 3.0), mu(0.1, 2.0), u(0.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double pc = c(rng), pa = alpha(rng), pm = mu(rng), u0 = u(rng);
    const double v0 = cramer_lundberg_psi(u0, pc, pa, pm), v1 = cramer_lundberg_psi(u0 + 0.5, pc, pa, pm);
    CHECK(v0 >= 0.0);
    CHECK(v0 <= 1.0);
    CHECK(v1 <= v0);
  }
}

TEST_CASE("compare: identical inputs") {
  const std::vector<PointValue> a{{1.0, 0, 0.3, 0.01}, {2.0, 0, 0.2, 0.01}, {1.0, 1, 0.4, 0.02}};
  const ComparisonReport r = compare(a, a, {{1.0, 0}, {2.0, 0}, {1.0, 1}});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.max_abs_z == 0.0);
  CHECK(r.pass());
}

TEST_CASE("compare: a three standard error shift") {
  const double se = 0.125;
  const std::vector<PointValue> mc{{2.0, 1, 0.25 + 3.0 * se, se}};
  const std::vector<PointValue> exact{{2.0, 1, 0.25, 0.0}};
  const ComparisonReport r = compare(mc, exact, {{2.0, 1}});
  CHECK(r.rows[0].z == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.rows[0].diff == doctest::Approx(3.0 * se));
  CHECK(r.pass(3.0));
  CHECK_FALSE(r.pass(2.9));

  // Two noisy inputs combine in quadrature.
  const std::vector<PointValue> other{{2.0, 1, 0.25, se}};
  const ComparisonReport both = compare(mc, other, {{2.0, 1}});
  CHECK(both.rows[0].z == doctest::Approx(3.0 / std::sqrt(2.0)));
}

TEST_CASE("property: compare is antisymmetric in z") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(0.0, 1.0), se(1e-4, 1e-2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<PointValue> a{{1.0, 0, v(rng), se(rng)}}, b{{1.0, 0, v(rng), se(rng)}};
    const ComparisonReport ab = compare(a, b, {{1.0, 0}}), ba = compare(b, a, {{1.0, 0}});
    CHECK(ab.rows[0].z == -ba.rows[0].z);
    CHECK(ab.max_abs_z == ba.max_abs_z);
  }
}

TEST_CASE("compare: matching and errors") {
  const std::vector<PointValue> a{{1.0, 0, 0.3, 0.01}}, b{{1.0 + 1e-12, 0, 0.3, 0.01}};
  CHECK_NOTHROW(compare(a, b, {{1.0, 0}}));
  CHECK_THROWS_AS(compare(a, b, {}), std::invalid_argument);
  CHECK_THROWS_AS(compare(a, b, {{2.0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(compare(a, b, {{1.0, 1}}), std::invalid_argument);
  // Both exact and different: z is large but finite.
  const ComparisonReport r = compare({{1.0, 0, 0.3, 0.0}}, {{1.0, 0, 0.3 + 1e-9, 0.0}}, {{1.0, 0}});
  CHECK(std::isfinite(r.max_abs_z));
  CHECK_FALSE(r.pass());
}

namespace {

SmoothnessInput classical_grid(double spacing, int points) {
  SmoothnessInput in;
  for (int k = 0; k < points; ++k) {
    const double u = 0.3 + spacing * k;
    in.u.push_back(u);
    in.psi.push_back(cramer_lundberg_psi(u, 2.0, 1.0, 1.0));
    in.std_err.push_back(0.0);
  }
  return in;
}

}  // namespace

TEST_CASE("smoothness: exact smooth input is consistent") {
  const SmoothnessInput in = classical_grid(0.1, 28);
  const SmoothnessReport r = smoothness_diagnostic(in);
  CHECK(r.noise_free);
  CHECK(r.verdict == SmoothnessVerdict::ConsistentWithC2);
  CHECK(r.spacing == doctest::Approx(0.1));
  REQUIRE(r.d2_fine.size() == r.u_fine.size());
  for (std::size_t k = 0; k < r.u_fine.size(); ++k) {
    const double exact = 0.125 * std::exp(-0.5 * r.u_fine[k]);
    // Second difference error: spacing^2 / 12 * psi''''.
    CHECK(std::abs(r.d2_fine[k] - exact) < 0.01 * 0.03125 / 12.0 * 1.01);
  }
  CHECK(to_string(r.verdict) == "consistent-with-C2");
}

TEST_CASE("smoothness: a kink is inconsistent") {
  SmoothnessInput in = classical_grid(0.1, 28);
  for (std::size_t k = 0; k < in.u.size(); ++k)
    if (in.u[k] > 1.55) in.psi[k] -= 0.2 * (in.u[k] - 1.55);
  const SmoothnessReport r = smoothness_diagnostic(in);
  CHECK(r.verdict == SmoothnessVerdict::Inconsistent);
  CHECK(to_string(r.verdict) == "inconsistent");
}

TEST_CASE("smoothness: pure noise is inconclusive, never smooth") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.01);
  int inconclusive = 0;
  for (int trial = 0; trial < 50; ++trial) {
    SmoothnessInput in;
    for (int k = 0; k < 28; ++k) {
      in.u.push_back(0.3 + 0.1 * k);
      in.psi.push_back(0.4 + noise(rng));
      in.std_err.push_back(0.01);
    }
    const SmoothnessReport r = smoothness_diagnostic(in);
    CHECK(r.verdict != SmoothnessVerdict::ConsistentWithC2);
    if (r.verdict == SmoothnessVerdict::InconclusiveNoise) ++inconclusive;
    CHECK(r.z_threshold > 3.0);
  }
  CHECK(inconclusive >= 45);
  CHECK(to_string(SmoothnessVerdict::InconclusiveNoise) == "inconclusive: noise-dominated");
}

TEST_CASE("smoothness: nested estimates use the exact covariance") {
  // Exact values with nested-covariance errors at n = 1e5: the curvature is
  // resolved, so the verdict is decided by the consistency test.
  SmoothnessInput in = classical_grid(0.1, 28);
  in.n_paths = 100000;
  in.nested = true;
  for (std::size_t k = 0; k < in.u.size(); ++k)
    in.std_err[k] = std::sqrt(in.psi[k] * (1.0 - in.psi[k]) / in.n_paths);
  const SmoothnessReport r = smoothness_diagnostic(in);
  CHECK_FALSE(r.noise_free);
  CHECK(r.mean_curvature_z > 3.0);
  CHECK(r.max_abs_z < 1e-2);
  CHECK(r.verdict == SmoothnessVerdict::ConsistentWithC2);
}

TEST_CASE("smoothness: preconditions") {
  SmoothnessInput small = classical_grid(0.1, 4);
  CHECK_THROWS_AS(smoothness_diagnostic(small), std::invalid_argument);
  SmoothnessInput uneven = classical_grid(0.1, 10);
  uneven.u[4] += 0.03;
  CHECK_THROWS_AS(smoothness_diagnostic(uneven), std::invalid_argument);
}
