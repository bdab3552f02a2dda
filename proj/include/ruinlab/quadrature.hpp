#pragma once

#include <span>
#include <vector>

namespace ruinlab {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point rule; safe to call from several threads.
const GaussRule& gauss_legendre(int n);

/// n-point Gauss-Legendre integral of f over [a, b].
template <class F>
double gauss_integrate(F&& f, double a, double b, int n) {
  if (!(b > a)) return 0.0;
  const GaussRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  return half * sum;
}

/// Sum of n-point rules over the panels delimited by `cuts` (sorted).
template <class F>
double gauss_integrate_panels(F&& f, std::span<const double> cuts, int n) {
  double sum = 0.0;
  for (std::size_t k = 1; k < cuts.size(); ++k) sum += gauss_integrate(f, cuts[k - 1], cuts[k], n);
  return sum;
}

/// Sorted, de-duplicated panel boundaries: [a, b] plus every break strictly
/// inside, with panels longer than max_width split evenly.
std::vector<double> panel_cuts(double a, double b, std::span<const double> breaks, double max_width);

}  // namespace ruinlab
