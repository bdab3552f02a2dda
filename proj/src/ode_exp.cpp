#include "ruinlab/ode_exp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace ruinlab {

namespace {

int exponential_direction(const ModelConfig& config) {
  const BusinessParams& b = config.business;
  if (!b.claims.is_exponential()) throw std::invalid_argument("third-order ODE requires exponential claims");
  const int s = jump_direction(b);
  if (s == 0) throw std::invalid_argument("third-order ODE requires one-sided jumps");
  return s;
}

void require_sigma(const ModelConfig& config) {
  for (double s : config.regimes.sigma)
    if (!(s > 0.0)) throw std::invalid_argument("third-order ODE requires sigma > 0 in every regime");
}

// y' = A(u) y + b(u) with y = (psi_i, psi_i', psi_i'') stacked by regime.
class FirstOrderSystem {
 public:
  FirstOrderSystem(const ModelConfig& config, std::function<double(int, double)> forcing)
      : config_(config), forcing_(std::move(forcing)), K_(config.regime_count()), s_(exponential_direction(config)) {
    require_sigma(config);
  }

  int dim() const { return 3 * K_; }

  Eigen::MatrixXd matrix(double u) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim(), dim());
    const double mu = config_.business.claims.mu;
    for (int i = 0; i < K_; ++i) {
      const double sig2 = config_.regimes.sigma[i] * config_.regimes.sigma[i];
      const OdeCoefficients pq = ode_coefficients(i, u, config_);
      A(3 * i, 3 * i + 1) = 1.0;
      A(3 * i + 1, 3 * i + 2) = 1.0;
      A(3 * i + 2, 3 * i + 2) += pq.p;
      A(3 * i + 2, 3 * i + 1) -= pq.q;
      for (int j = 0; j < K_; ++j) {
        const double lam = config_.generator(i, j);
        A(3 * i + 2, 3 * j + 1) -= 2.0 * lam / (sig2 * u * u);
        A(3 * i + 2, 3 * j) += s_ * 2.0 * lam / (mu * sig2 * u * u);
      }
    }
    return A;
  }

  Eigen::VectorXd forcing(double u) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim());
    if (forcing_)
      for (int i = 0; i < K_; ++i) b(3 * i + 2) = forcing_(i, u);
    return b;
  }

  double forcing(int i, double u) const { return forcing_ ? forcing_(i, u) : 0.0; }

 private:
  const ModelConfig& config_;
  std::function<double(int, double)> forcing_;
  int K_;
  int s_;
};

}  // namespace

OdeCoefficients ode_coefficients(double a, double sigma, double c, double alpha, double mu, int direction, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("ode_coefficients: requires u > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("ode_coefficients: requires sigma > 0");
  const double s = direction;
  const double sig2 = sigma * sigma;
  OdeCoefficients out;
  out.p = s / mu - 2.0 * (1.0 + a / sig2) / u - 2.0 * c / (sig2 * u * u);
  out.q = -s * 2.0 * a / (mu * sig2 * u) + (a - alpha - s * c / mu) * 2.0 / (sig2 * u * u);
  return out;
}

OdeCoefficients ode_coefficients(int i, double u, const ModelConfig& config) {
  if (i < 0 || i >= config.regime_count()) throw std::out_of_range("ode_coefficients: regime out of range");
  const int s = exponential_direction(config);
  const BusinessParams& b = config.business;
  return ode_coefficients(config.regimes.a[i], config.regimes.sigma[i], b.c, b.alpha, b.claims.mu, s, u);
}

double ode_residual(std::span<const double> psi, std::span<const double> psi_p, double psi_pp_i, double psi_ppp_i,
                    int i, double u, const ModelConfig& config) {
  if (!(u > 0.0)) throw std::invalid_argument("ode_residual: requires u > 0");
  const int K = config.regime_count();
  if (static_cast<int>(psi.size()) != K || static_cast<int>(psi_p.size()) != K)
    throw std::invalid_argument("ode_residual: need psi and psi' for every regime");
  const int s = exponential_direction(config);
  const OdeCoefficients pq = ode_coefficients(i, u, config);
  const double sig2 = config.regimes.sigma[i] * config.regimes.sigma[i];
  const double mu = config.business.claims.mu;
  double coupled_slope = 0.0;
  double coupled_value = 0.0;
  for (int j = 0; j < K; ++j) {
    coupled_slope += config.generator(i, j) * psi_p[j];
    coupled_value += config.generator(i, j) * psi[j];
  }
  return psi_ppp_i - pq.p * psi_pp_i + pq.q * psi_p[i] + 2.0 / (sig2 * u * u) * coupled_slope -
         s * 2.0 / (mu * sig2 * u * u) * coupled_value;
}

std::vector<EquivalenceSample> equivalence_samples(const SmoothCandidate& f, std::span<const double> u_samples,
                                                   const ModelConfig& config, double fd_step) {
  const int s = exponential_direction(config);
  require_sigma(config);
  const int K = config.regime_count();
  if (static_cast<int>(f.size()) != K) throw std::invalid_argument("equivalence_check: one candidate per regime");
  for (const auto& c : f)
    if (!c.d3f) throw std::invalid_argument("equivalence_check: candidates need a third derivative");
  const double mu = config.business.claims.mu;
  std::vector<EquivalenceSample> out;
  for (double u : u_samples) {
    if (!(u - fd_step > 0.0)) throw std::invalid_argument("equivalence_check: sample too close to 0");
    const auto g = ide_residual(f, u, config);
    const auto g_plus = ide_residual(f, u + fd_step, config);
    const auto g_minus = ide_residual(f, u - fd_step, config);
    std::vector<double> psi(K), psi_p(K);
    for (int j = 0; j < K; ++j) {
      psi[j] = f[j].f(u);
      psi_p[j] = f[j].df(u);
    }
    for (int i = 0; i < K; ++i) {
      EquivalenceSample e;
      e.u = u;
      e.regime = i;
      e.ide_side = mu * (g_plus[i] - g_minus[i]) / (2.0 * fd_step) - s * g[i];
      const double sig2 = config.regimes.sigma[i] * config.regimes.sigma[i];
      e.ode_side = 0.5 * mu * sig2 * u * u * ode_residual(psi, psi_p, f[i].d2f(u), f[i].d3f(u), i, u, config);
      const double scale = std::max(std::abs(e.ide_side), std::abs(e.ode_side));
      e.relative_gap = scale > 0.0 ? std::abs(e.ide_side - e.ode_side) / scale : 0.0;
      out.push_back(e);
    }
  }
  return out;
}

double equivalence_check(const SmoothCandidate& f, std::span<const double> u_samples, const ModelConfig& config,
                         double fd_step) {
  double worst = 0.0;
  for (const auto& e : equivalence_samples(f, u_samples, config, fd_step)) worst = std::max(worst, e.relative_gap);
  return worst;
}

std::vector<double> bvp_grid(double u_min, double u_max, int points, double stretch) {
  if (!(u_min > 0.0) || !(u_max > u_min)) throw std::invalid_argument("bvp_grid: requires 0 < u_min < u_max");
  if (points < 3) throw std::invalid_argument("bvp_grid: need at least 3 points");
  std::vector<double> u(points);
  for (int n = 0; n < points; ++n) {
    const double s = static_cast<double>(n) / (points - 1);
    const double w = stretch > 0.0 ? std::expm1(stretch * s) / std::expm1(stretch) : s;
    u[n] = u_min + (u_max - u_min) * w;
  }
  u.back() = u_max;
  return u;
}

double solution_value(const SolutionGrid& grid, int regime, double u) {
  if (regime < 0 || regime >= static_cast<int>(grid.psi.size())) throw std::out_of_range("solution_value: regime");
  if (grid.u.size() < 2 || u < grid.u.front() || u > grid.u.back())
    throw std::out_of_range("solution_value: u outside the solution grid");
  std::size_t k = static_cast<std::size_t>(std::upper_bound(grid.u.begin(), grid.u.end(), u) - grid.u.begin());
  k = std::clamp<std::size_t>(k, 1, grid.u.size() - 1);
  const double h = grid.u[k] - grid.u[k - 1];
  const double t = (u - grid.u[k - 1]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const auto& v = grid.psi[regime];
  const auto& d = grid.psi_p[regime];
  return (2 * t3 - 3 * t2 + 1) * v[k - 1] + (t3 - 2 * t2 + t) * h * d[k - 1] + (-2 * t3 + 3 * t2) * v[k] +
         (t3 - t2) * h * d[k];
}

BvpOptions bvp_options(const ModelConfig& config) {
  BvpOptions o;
  o.points = config.numerics.bvp_points;
  o.stretch = config.numerics.bvp_stretch;
  return o;
}

SolutionGrid solve_bvp(const ModelConfig& config, double u_min, double u_max, const std::vector<BvpAnchor>& anchors,
                       const BvpOptions& options) {
  const int K = config.regime_count();
  if (static_cast<int>(anchors.size()) != K) throw std::invalid_argument("solve_bvp: one anchor per regime");
  const FirstOrderSystem sys(config, options.forcing);
  const int d = sys.dim();
  const std::vector<double> grid = bvp_grid(u_min, u_max, options.points, options.stretch);
  const int N = static_cast<int>(grid.size());
  const int unknowns = N * d;

  std::vector<Eigen::MatrixXd> A(N);
  std::vector<Eigen::VectorXd> b(N);
  for (int n = 0; n < N; ++n) {
    A[n] = sys.matrix(grid[n]);
    b[n] = sys.forcing(grid[n]);
  }
  std::vector<Eigen::MatrixXd> Am(N - 1);
  std::vector<Eigen::VectorXd> bm(N - 1);
  for (int n = 0; n + 1 < N; ++n) {
    const double mid = 0.5 * (grid[n] + grid[n + 1]);
    Am[n] = sys.matrix(mid);
    bm[n] = sys.forcing(mid);
  }

  // Residual of the full discrete system: left conditions, one block per
  // interval, right conditions.
  auto residual = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd r(unknowns);
    int row = 0;
    for (int i = 0; i < K; ++i) {
      r(row++) = y(3 * i) - anchors[i].psi_min;
      r(row++) = y(3 * i + 1) - anchors[i].dpsi_min;
    }
    for (int n = 0; n + 1 < N; ++n) {
      const double h = grid[n + 1] - grid[n];
      const auto yn = y.segment(n * d, d);
      const auto yn1 = y.segment((n + 1) * d, d);
      const Eigen::VectorXd fn = A[n] * yn + b[n];
      const Eigen::VectorXd fn1 = A[n + 1] * yn1 + b[n + 1];
      const Eigen::VectorXd ym = 0.5 * (yn + yn1) + h / 8.0 * (fn - fn1);
      const Eigen::VectorXd fm = Am[n] * ym + bm[n];
      r.segment(row, d) = yn1 - yn - h / 6.0 * (fn + 4.0 * fm + fn1);
      row += d;
    }
    for (int i = 0; i < K; ++i) r(row++) = y((N - 1) * d + 3 * i) - anchors[i].psi_max;
    return r;
  };

  // The discrete system is affine in y, so its Jacobian is constant.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(N) * d * d * 2 + 3 * K);
  int row = 0;
  for (int i = 0; i < K; ++i) {
    trip.emplace_back(row++, 3 * i, 1.0);
    trip.emplace_back(row++, 3 * i + 1, 1.0);
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  for (int n = 0; n + 1 < N; ++n) {
    const double h = grid[n + 1] - grid[n];
    const Eigen::MatrixXd left = -I - h / 6.0 * A[n] - (2.0 * h / 3.0) * Am[n] * (0.5 * I + h / 8.0 * A[n]);
    const Eigen::MatrixXd right = I - h / 6.0 * A[n + 1] - (2.0 * h / 3.0) * Am[n] * (0.5 * I - h / 8.0 * A[n + 1]);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        if (left(r, c) != 0.0) trip.emplace_back(row + r, n * d + c, left(r, c));
        if (right(r, c) != 0.0) trip.emplace_back(row + r, (n + 1) * d + c, right(r, c));
      }
    row += d;
  }
  for (int i = 0; i < K; ++i) trip.emplace_back(row++, (N - 1) * d + 3 * i, 1.0);

  Eigen::SparseMatrix<double> J(unknowns, unknowns);
  J.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) throw NumericalError("solve_bvp: collocation matrix is singular");

  SolutionGrid out;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(unknowns);
  Eigen::VectorXd r = residual(y);
  double norm = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < options.max_iterations && norm > options.newton_tolerance; ++it) {
    const Eigen::VectorXd step = lu.solve(r);
    if (lu.info() != Eigen::Success) throw NumericalError("solve_bvp: linear solve failed");
    y -= step;
    r = residual(y);
    norm = r.lpNorm<Eigen::Infinity>();
    out.iterations = it + 1;
  }
  out.newton_residual = norm;
  if (!(norm <= options.newton_tolerance))
    throw NumericalError("solve_bvp: collocation did not converge (residual " + std::to_string(norm) + ")");

  out.u = grid;
  out.anchors = anchors;
  out.psi.assign(K, std::vector<double>(N));
  out.psi_p.assign(K, std::vector<double>(N));
  out.psi_pp.assign(K, std::vector<double>(N));
  for (int n = 0; n < N; ++n)
    for (int i = 0; i < K; ++i) {
      out.psi[i][n] = y(n * d + 3 * i);
      out.psi_p[i][n] = y(n * d + 3 * i + 1);
      out.psi_pp[i][n] = y(n * d + 3 * i + 2);
    }

  // Independent check: rebuild the collocation cubic at each midpoint and
  // evaluate the ODE through ode_residual.
  std::vector<double> psi(K), psi_p(K);
  for (int n = 0; n + 1 < N; ++n) {
    const double h = grid[n + 1] - grid[n];
    const double mid = 0.5 * (grid[n] + grid[n + 1]);
    const auto yn = y.segment(n * d, d);
    const auto yn1 = y.segment((n + 1) * d, d);
    const Eigen::VectorXd fn = A[n] * yn + b[n];
    const Eigen::VectorXd fn1 = A[n + 1] * yn1 + b[n + 1];
    const Eigen::VectorXd ym = 0.5 * (yn + yn1) + h / 8.0 * (fn - fn1);
    const Eigen::VectorXd slope = 1.5 / h * (yn1 - yn) - 0.25 * (fn + fn1);
    for (int j = 0; j < K; ++j) {
      psi[j] = ym(3 * j);
      psi_p[j] = ym(3 * j + 1);
    }
    for (int i = 0; i < K; ++i) {
      const double ode = ode_residual(psi, psi_p, ym(3 * i + 2), slope(3 * i + 2), i, mid, config) - sys.forcing(i, mid);
      out.max_residual = std::max({out.max_residual, std::abs(ode), std::abs(slope(3 * i) - ym(3 * i + 1)),
                                   std::abs(slope(3 * i + 1) - ym(3 * i + 2))});
    }
  }

  for (int i = 0; i < K; ++i)
    for (int n = 0; n < N; ++n) {
      const double v = out.psi[i][n];
      if (!(v >= -0.01 && v <= 1.01))
        throw NumericalError("solve_bvp: anchor inconsistency, psi_" + std::to_string(i) + "(" +
                             std::to_string(grid[n]) + ") = " + std::to_string(v));
      if (n > 0 && v > out.psi[i][n - 1] + 1e-6) out.monotone = false;
    }
  return out;
}

}  // namespace ruinlab
