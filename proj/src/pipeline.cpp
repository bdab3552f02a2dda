#include "ruinlab/pipeline.hpp"

#include <chrono>
#include <stdexcept>

#include "ruinlab/rng.hpp"

namespace ruinlab {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CrossValidationResult cross_validate(const ModelConfig& config, const CrossValidationOptions& o) {
  if (o.horizons.empty()) throw std::invalid_argument("cross_validate: need at least one horizon");
  if (!(o.slope_step > 0.0) || !(o.u_min - o.slope_step > 0.0))
    throw std::invalid_argument("cross_validate: slope step must keep u_min - step > 0");
  const int K = config.regime_count();
  CrossValidationResult r;
  r.anchors.resize(K);
  r.anchor_err_min.resize(K);
  r.anchor_err_max.resize(K);
  r.check.resize(K);
  r.converged.resize(K);

  std::vector<double> anchor_u{o.u_min - o.slope_step, o.u_min, o.u_min + o.slope_step, o.u_max};
  const std::size_t smooth_offset = anchor_u.size();
  for (int k = 0; k < o.smooth_points; ++k) anchor_u.push_back(o.smooth_start + k * o.smooth_spacing);
  const std::size_t last = o.horizons.size() - 1;
  const double h = config.numerics.mc_step;

  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < K; ++i) {
    const RuinTable tab =
        simulate_ruin_table(config, anchor_u, i, o.horizons, o.anchor_paths, stream_seed(o.anchor_seed, i, 100), o.workers);
    auto est = [&](std::size_t k) {
      return make_estimate(anchor_u[k], i, o.horizons[last], o.anchor_paths, tab.ruined[k][last], h);
    };
    r.anchors[i].psi_min = est(1).psi_hat;
    r.anchors[i].dpsi_min = (est(2).psi_hat - est(0).psi_hat) / (2.0 * o.slope_step);
    r.anchors[i].psi_max = est(3).psi_hat;
    r.anchor_err_min[i] = est(1).std_err;
    r.anchor_err_max[i] = est(3).std_err;
    if (o.smooth_points > 0) {
      SmoothnessInput in;
      in.n_paths = o.anchor_paths;
      in.nested = true;
      for (int k = 0; k < o.smooth_points; ++k) {
        const RuinEstimate e = est(smooth_offset + k);
        in.u.push_back(e.u);
        in.psi.push_back(e.psi_hat);
        in.std_err.push_back(e.std_err);
      }
      r.smoothness.push_back(smoothness_diagnostic(in));
    }
  }
  r.anchor_seconds = seconds_since(t0);

  r.solution = solve_bvp(config, o.u_min, o.u_max, r.anchors, o.bvp);

  t0 = std::chrono::steady_clock::now();
  std::vector<PointValue> mc, bvp;
  std::vector<ComparePoint> points;
  for (int i = 0; i < K; ++i) {
    const RuinTable tab =
        simulate_ruin_table(config, o.check_u, i, o.horizons, o.check_paths, stream_seed(o.check_seed, i, 200), o.workers);
    for (std::size_t k = 0; k < o.check_u.size(); ++k) {
      std::vector<RuinEstimate> by_horizon;
      for (std::size_t j = 0; j < o.horizons.size(); ++j)
        by_horizon.push_back(make_estimate(o.check_u[k], i, o.horizons[j], o.check_paths, tab.ruined[k][j], h));
      r.converged[i].push_back(horizon_converged(by_horizon));
      const RuinEstimate& e = by_horizon.back();
      r.check[i].push_back(e);
      mc.push_back({e.u, i, e.psi_hat, e.std_err});
      bvp.push_back({e.u, i, solution_value(r.solution, i, e.u), 0.0});
      points.push_back({e.u, i});
    }
  }
  r.check_seconds = seconds_since(t0);
  r.comparison = compare(mc, bvp, points);
  return r;
}

}  // namespace ruinlab
