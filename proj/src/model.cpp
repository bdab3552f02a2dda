#include "ruinlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "ruinlab/ctmc.hpp"
#include "ruinlab/quadrature.hpp"

namespace ruinlab {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kMassTol = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(ConfigErrorKind kind, const std::string& detail) { throw ConfigError(kind, detail); }

// Rates may be given as JSON numbers or as decimal strings.
double number(const Json& node, const std::string& key) {
  try {
    if (node.is_string()) {
      const std::string text = node.get<std::string>();
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    if (node.is_number()) return node.get<double>();
  } catch (const std::exception&) {
  }
  fail(ConfigErrorKind::ParseError, "field '" + key + "' is not a number");
}

const Json& require(const Json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) fail(ConfigErrorKind::ParseError, "missing field '" + key + "'");
  return obj.at(key);
}

std::vector<double> number_array(const Json& node, const std::string& key) {
  if (!node.is_array()) fail(ConfigErrorKind::ParseError, "field '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(number(v, key));
  return out;
}

double optional_number(const Json& obj, const std::string& key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), key) : fallback;
}

std::int64_t optional_integer(const Json& obj, const std::string& key, std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const double v = number(obj.at(key), key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(ConfigErrorKind::ParseError, "field '" + key + "' must be an integer");
  return static_cast<std::int64_t>(v);
}

bool strongly_connected(const std::vector<std::vector<double>>& q) {
  const std::size_t n = q.size();
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t j = stack.back();
      stack.pop_back();
      for (std::size_t k = 0; k < n; ++k)
        if (k != j && q[j][k] > 0.0 && !seen[k]) {
          seen[k] = true;
          stack.push_back(k);
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

// Distribution function and tail of a one-sided magnitude law.
double magnitude_cdf(const ClaimLaw& law, double m) {
  if (m <= 0.0) return 0.0;
  switch (law.kind) {
    case ClaimKind::Exponential: return -std::expm1(-m / law.mu);
    case ClaimKind::Gamma: return boost::math::gamma_p(law.shape, m / law.scale);
    case ClaimKind::Uniform: return std::clamp((m - law.lo) / (law.hi - law.lo), 0.0, 1.0);
    case ClaimKind::DoubleExponential: break;
  }
  return 0.0;
}

double magnitude_tail(const ClaimLaw& law, double m) {
  if (m <= 0.0) return 1.0;
  switch (law.kind) {
    case ClaimKind::Exponential: return std::exp(-m / law.mu);
    case ClaimKind::Gamma: return boost::math::gamma_q(law.shape, m / law.scale);
    case ClaimKind::Uniform: return std::clamp((law.hi - m) / (law.hi - law.lo), 0.0, 1.0);
    case ClaimKind::DoubleExponential: break;
  }
  return 0.0;
}

double magnitude_pdf(const ClaimLaw& law, double m) {
  if (m < 0.0) return 0.0;
  switch (law.kind) {
    case ClaimKind::Exponential: return std::exp(-m / law.mu) / law.mu;
    case ClaimKind::Gamma:
      if (m == 0.0) return law.shape == 1.0 ? 1.0 / law.scale : 0.0;
      return boost::math::gamma_p_derivative(law.shape, m / law.scale) / law.scale;
    case ClaimKind::Uniform: return (m >= law.lo && m <= law.hi) ? 1.0 / (law.hi - law.lo) : 0.0;
    case ClaimKind::DoubleExponential: break;
  }
  return 0.0;
}

ClaimLaw parse_claims(const Json& node) {
  ClaimLaw law;
  const Json& kind = require(node, "kind");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "exponential") {
    law.kind = ClaimKind::Exponential;
    law.mu = number(require(node, "mu"), "claims.mu");
  } else if (k == "gamma") {
    law.kind = ClaimKind::Gamma;
    law.shape = number(require(node, "shape"), "claims.shape");
    law.scale = number(require(node, "scale"), "claims.scale");
    law.mu = law.shape * law.scale;
  } else if (k == "uniform") {
    law.kind = ClaimKind::Uniform;
    law.lo = number(require(node, "lo"), "claims.lo");
    law.hi = number(require(node, "hi"), "claims.hi");
    law.mu = 0.5 * (law.lo + law.hi);
  } else if (k == "double_exponential") {
    law.kind = ClaimKind::DoubleExponential;
    law.p_up = number(require(node, "p_up"), "claims.p_up");
    law.mu_up = number(require(node, "mu_up"), "claims.mu_up");
    law.mu_down = number(require(node, "mu_down"), "claims.mu_down");
    law.mu = law.p_up * law.mu_up + (1.0 - law.p_up) * law.mu_down;
  } else {
    fail(ConfigErrorKind::ParseError, "unknown claims.kind '" + k + "'");
  }
  return law;
}

Variant parse_variant(const Json& node) {
  const std::string v = node.is_string() ? node.get<std::string>() : "";
  if (v == "NonLife") return Variant::NonLife;
  if (v == "Annuity") return Variant::Annuity;
  if (v == "Mixed") return Variant::Mixed;
  fail(ConfigErrorKind::ParseError, "unknown variant '" + v + "'");
}

void check_claims(const BusinessParams& b) {
  const ClaimLaw& law = b.claims;
  const bool two_sided = law.kind == ClaimKind::DoubleExponential;
  if (b.variant == Variant::Mixed && !two_sided)
    fail(ConfigErrorKind::BadClaimDensity, "Mixed variant requires a two-sided claim law (double_exponential)");
  if (b.variant != Variant::Mixed && two_sided)
    fail(ConfigErrorKind::BadClaimDensity, "double_exponential claims are only valid for the Mixed variant");
  switch (law.kind) {
    case ClaimKind::Exponential:
      if (!(law.mu > 0.0)) fail(ConfigErrorKind::BadClaimDensity, "exponential claims require mu > 0");
      break;
    case ClaimKind::Gamma:
      if (!(law.shape > 0.0) || !(law.scale > 0.0)) fail(ConfigErrorKind::BadClaimDensity, "gamma claims require shape, scale > 0");
      break;
    case ClaimKind::Uniform:
      if (!(law.lo >= 0.0) || !(law.hi > law.lo)) fail(ConfigErrorKind::BadClaimDensity, "uniform claims require 0 <= lo < hi");
      break;
    case ClaimKind::DoubleExponential:
      if (!(law.p_up >= 0.0 && law.p_up <= 1.0) || !(law.mu_up > 0.0) || !(law.mu_down > 0.0))
        fail(ConfigErrorKind::BadClaimDensity, "double_exponential requires p_up in [0,1] and positive means");
      break;
  }
  // Numerical mass of the signed density over its declared support.
  const JumpLaw jumps(b);
  const double spread = law.kind == ClaimKind::Gamma ? law.scale * (law.shape + 40.0 * std::sqrt(law.shape) + 40.0)
                                                      : 200.0 * law.mu;
  const double lo = std::isfinite(jumps.support_lo())
                        ? jumps.support_lo()
                        : (law.kind == ClaimKind::DoubleExponential ? -200.0 * law.mu_down : -spread);
  const double hi = std::isfinite(jumps.support_hi())
                        ? jumps.support_hi()
                        : (law.kind == ClaimKind::DoubleExponential ? 200.0 * law.mu_up : spread);
  std::vector<double> breaks = jumps.kinks();
  const double width = std::max(std::min({law.mu, law.mu_up, law.mu_down, law.scale, hi - lo}), 1e-3);
  const auto cuts = panel_cuts(lo, hi, breaks, width);
  const double mass = gauss_integrate_panels([&](double x) { return jumps.density(x); }, cuts, 64);
  if (!(std::abs(mass - 1.0) <= kMassTol))
    fail(ConfigErrorKind::BadClaimDensity, "claim density mass " + std::to_string(mass) + " differs from 1");
}

void check_numerics(const Numerics& n) {
  auto bad = [](const std::string& what) { fail(ConfigErrorKind::BadNumerics, what); };
  if (!(n.mc_step > 0.0)) bad("numerics.mc_step must be positive");
  if (n.quad_nodes < 2) bad("numerics.quad_nodes must be at least 2");
  if (n.bvp_points < 3) bad("numerics.bvp_points must be at least 3");
  if (!(n.bvp_stretch >= 0.0)) bad("numerics.bvp_stretch must be non-negative");
  if (!(n.bvp_u_min > 0.0) || !(n.bvp_u_max > n.bvp_u_min)) bad("numerics requires 0 < bvp_u_min < bvp_u_max");
  if (!(n.horizon > 0.0)) bad("numerics.horizon must be positive");
  if (n.n_paths < 1) bad("numerics.n_paths must be at least 1");
  if (n.far_field_level > 0.0 && !(n.far_field_step > 0.0)) bad("numerics.far_field_step must be positive");
}

}  // namespace

std::string_view to_string(ConfigErrorKind kind) {
  switch (kind) {
    case ConfigErrorKind::ParseError: return "ParseError";
    case ConfigErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ConfigErrorKind::RowSumViolation: return "RowSumViolation";
    case ConfigErrorKind::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ConfigErrorKind::NotCommunicating: return "NotCommunicating";
    case ConfigErrorKind::NonPositiveSigma: return "NonPositiveSigma";
    case ConfigErrorKind::NoRuinPossible: return "NoRuinPossible";
    case ConfigErrorKind::BadClaimDensity: return "BadClaimDensity";
    case ConfigErrorKind::SignConvention: return "SignConvention";
    case ConfigErrorKind::BadNumerics: return "BadNumerics";
  }
  return "ConfigError";
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::NonLife: return "NonLife";
    case Variant::Annuity: return "Annuity";
    case Variant::Mixed: return "Mixed";
  }
  return "";
}

std::string_view to_string(ClaimKind k) {
  switch (k) {
    case ClaimKind::Exponential: return "exponential";
    case ClaimKind::Gamma: return "gamma";
    case ClaimKind::Uniform: return "uniform";
    case ClaimKind::DoubleExponential: return "double_exponential";
  }
  return "";
}

int jump_direction(const BusinessParams& business) {
  switch (business.variant) {
    case Variant::NonLife: return -1;
    case Variant::Annuity: return 1;
    case Variant::Mixed: return 0;
  }
  return 0;
}

GeneratorMatrix GeneratorMatrix::create(std::vector<std::vector<double>> rows) {
  const std::size_t n = rows.size();
  if (n == 0) fail(ConfigErrorKind::DimensionMismatch, "generator must have at least one regime");
  for (const auto& row : rows)
    if (row.size() != n) fail(ConfigErrorKind::DimensionMismatch, "generator must be square");
  for (std::size_t j = 0; j < n; ++j) {
    double off = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(rows[j][k])) fail(ConfigErrorKind::ParseError, "generator entries must be finite");
      if (k == j) continue;
      if (rows[j][k] < 0.0) fail(ConfigErrorKind::NegativeOffDiagonal, "lambda[" + std::to_string(j) + "][" + std::to_string(k) + "] < 0");
      off += rows[j][k];
    }
    if (std::abs(off + rows[j][j]) > kRowSumTol)
      fail(ConfigErrorKind::RowSumViolation, "row " + std::to_string(j) + " sums to " + std::to_string(off + rows[j][j]));
    rows[j][j] = -off;
  }
  if (n > 1 && !strongly_connected(rows)) fail(ConfigErrorKind::NotCommunicating, "regime states do not all communicate");
  return GeneratorMatrix(std::move(rows));
}

double kappa_of(const RegimeParams& regimes, int k) {
  if (k < 0 || k >= regimes.size()) throw std::out_of_range("kappa_of: regime index " + std::to_string(k));
  return regimes.kappa(k);
}

ModelConfig validate_config(const Json& raw) {
  if (!raw.is_object()) fail(ConfigErrorKind::ParseError, "config must be an object");
  ModelConfig cfg;

  const Json& lambda = require(raw, "lambda");
  if (!lambda.is_array()) fail(ConfigErrorKind::ParseError, "field 'lambda' must be an array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : lambda) rows.push_back(number_array(row, "lambda"));
  const std::int64_t K = optional_integer(raw, "K", static_cast<std::int64_t>(rows.size()));
  if (K != static_cast<std::int64_t>(rows.size())) fail(ConfigErrorKind::DimensionMismatch, "K does not match lambda");
  cfg.generator = GeneratorMatrix::create(std::move(rows));

  cfg.allow_degenerate = raw.contains("allow_degenerate") && raw.at("allow_degenerate").get<bool>();
  cfg.regimes.a = number_array(require(raw, "a"), "a");
  cfg.regimes.sigma = number_array(require(raw, "sigma"), "sigma");
  if (cfg.regimes.a.size() != static_cast<std::size_t>(K) || cfg.regimes.sigma.size() != static_cast<std::size_t>(K))
    fail(ConfigErrorKind::DimensionMismatch, "a and sigma must have length K");
  for (int k = 0; k < K; ++k) {
    const double s = cfg.regimes.sigma[k];
    if (!std::isfinite(s) || !std::isfinite(cfg.regimes.a[k])) fail(ConfigErrorKind::ParseError, "a and sigma must be finite");
    if (s > 0.0) continue;
    if (!(cfg.allow_degenerate && s == 0.0))
      fail(ConfigErrorKind::NonPositiveSigma, "sigma[" + std::to_string(k) + "] must be > 0");
  }

  BusinessParams& b = cfg.business;
  b.c = number(require(raw, "c"), "c");
  b.alpha = number(require(raw, "alpha"), "alpha");
  b.variant = parse_variant(require(raw, "variant"));
  b.claims = parse_claims(require(raw, "claims"));
  if (!std::isfinite(b.c)) fail(ConfigErrorKind::ParseError, "c must be finite");
  if (!(b.alpha > 0.0)) fail(ConfigErrorKind::BadClaimDensity, "alpha must be > 0");
  if (b.variant == Variant::NonLife && !(b.c > 0.0)) fail(ConfigErrorKind::SignConvention, "NonLife requires c > 0");
  if (b.variant == Variant::Annuity && !(b.c < 0.0)) fail(ConfigErrorKind::SignConvention, "Annuity requires c < 0");
  check_claims(b);
  if (b.c >= 0.0 && !JumpLaw(b).has_down())
    fail(ConfigErrorKind::NoRuinPossible, "c >= 0 with non-negative jumps: the reserve never decreases");

  if (raw.contains("numerics")) {
    const Json& n = raw.at("numerics");
    Numerics& num = cfg.numerics;
    num.mc_step = optional_number(n, "mc_step", num.mc_step);
    num.quad_nodes = static_cast<int>(optional_integer(n, "quad_nodes", num.quad_nodes));
    num.bvp_points = static_cast<int>(optional_integer(n, "bvp_points", num.bvp_points));
    num.bvp_stretch = optional_number(n, "bvp_stretch", num.bvp_stretch);
    num.bvp_u_min = optional_number(n, "bvp_u_min", num.bvp_u_min);
    num.bvp_u_max = optional_number(n, "bvp_u_max", num.bvp_u_max);
    num.horizon = optional_number(n, "horizon", num.horizon);
    num.n_paths = optional_integer(n, "n_paths", num.n_paths);
    num.far_field_level = optional_number(n, "far_field_level", num.far_field_level);
    num.far_field_step = optional_number(n, "far_field_step", num.far_field_step);
  }
  check_numerics(cfg.numerics);
  if (raw.contains("seed") && raw.at("seed").is_number_unsigned())
    cfg.seed = raw.at("seed").get<std::uint64_t>();
  else
    cfg.seed = static_cast<std::uint64_t>(optional_integer(raw, "seed", 0));
  cfg.chain = embedded_chain(cfg.generator);
  return cfg;
}

Json read_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ConfigErrorKind::ParseError, "cannot open config '" + path.string() + "'");
  Json raw;
  try {
    raw = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ConfigErrorKind::ParseError, e.what());
  }
  return raw;
}

ModelConfig load_config(const std::filesystem::path& path) { return validate_config(read_config_json(path)); }

Json to_json(const ModelConfig& cfg) {
  Json j;
  j["K"] = cfg.regime_count();
  j["lambda"] = cfg.generator.rows();
  j["a"] = cfg.regimes.a;
  j["sigma"] = cfg.regimes.sigma;
  j["allow_degenerate"] = cfg.allow_degenerate;
  j["c"] = cfg.business.c;
  j["alpha"] = cfg.business.alpha;
  j["variant"] = std::string(to_string(cfg.business.variant));
  const ClaimLaw& law = cfg.business.claims;
  Json claims{{"kind", std::string(to_string(law.kind))}};
  switch (law.kind) {
    case ClaimKind::Exponential: claims["mu"] = law.mu; break;
    case ClaimKind::Gamma: claims["shape"] = law.shape; claims["scale"] = law.scale; break;
    case ClaimKind::Uniform: claims["lo"] = law.lo; claims["hi"] = law.hi; break;
    case ClaimKind::DoubleExponential:
      claims["p_up"] = law.p_up;
      claims["mu_up"] = law.mu_up;
      claims["mu_down"] = law.mu_down;
      break;
  }
  j["claims"] = claims;
  const Numerics& n = cfg.numerics;
  j["numerics"] = {{"mc_step", n.mc_step},         {"quad_nodes", n.quad_nodes},
                   {"bvp_points", n.bvp_points},   {"bvp_stretch", n.bvp_stretch},
                   {"bvp_u_min", n.bvp_u_min},     {"bvp_u_max", n.bvp_u_max},
                   {"horizon", n.horizon},         {"n_paths", n.n_paths},
                   {"far_field_level", n.far_field_level}, {"far_field_step", n.far_field_step}};
  j["seed"] = cfg.seed;
  return j;
}

JumpLaw::JumpLaw(const BusinessParams& business) : law_(business.claims), variant_(business.variant) {
  switch (law_.kind) {
    case ClaimKind::Exponential:
    case ClaimKind::Gamma:
      if (variant_ == Variant::Annuity) {
        lo_ = 0.0;
        hi_ = kInf;
      } else {
        lo_ = -kInf;
        hi_ = 0.0;
      }
      break;
    case ClaimKind::Uniform:
      if (variant_ == Variant::Annuity) {
        lo_ = law_.lo;
        hi_ = law_.hi;
      } else {
        lo_ = -law_.hi;
        hi_ = -law_.lo;
      }
      kinks_ = {lo_, hi_};
      break;
    case ClaimKind::DoubleExponential:
      lo_ = law_.p_up < 1.0 ? -kInf : 0.0;
      hi_ = law_.p_up > 0.0 ? kInf : 0.0;
      kinks_ = {0.0};
      break;
  }
}

double JumpLaw::density(double x) const {
  if (law_.kind == ClaimKind::DoubleExponential) {
    if (x > 0.0) return law_.p_up * std::exp(-x / law_.mu_up) / law_.mu_up;
    if (x < 0.0) return (1.0 - law_.p_up) * std::exp(x / law_.mu_down) / law_.mu_down;
    return 0.0;
  }
  return magnitude_pdf(law_, variant_ == Variant::Annuity ? x : -x);
}

double JumpLaw::cdf(double x) const {
  if (law_.kind == ClaimKind::DoubleExponential) {
    if (x < 0.0) return (1.0 - law_.p_up) * std::exp(x / law_.mu_down);
    return (1.0 - law_.p_up) - law_.p_up * std::expm1(-x / law_.mu_up);
  }
  // Downward jumps: P(-m <= x) = P(m >= -x).
  return variant_ == Variant::Annuity ? magnitude_cdf(law_, x) : magnitude_tail(law_, -x);
}

double JumpLaw::upper_tail(double x) const {
  if (law_.kind == ClaimKind::DoubleExponential) {
    if (x >= 0.0) return law_.p_up * std::exp(-x / law_.mu_up);
    return 1.0 - (1.0 - law_.p_up) * std::exp(x / law_.mu_down);
  }
  return variant_ == Variant::Annuity ? magnitude_tail(law_, x) : magnitude_cdf(law_, -x);
}

}  // namespace ruinlab
