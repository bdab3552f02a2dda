#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ruinlab/errors.hpp"

namespace ruinlab {

using Json = nlohmann::json;

/// Intensity matrix of the regime process. Only constructible through
/// `create`, which enforces the generator invariants.
class GeneratorMatrix {
 public:
  GeneratorMatrix() = default;

  /// Throws ConfigError (DimensionMismatch, NegativeOffDiagonal,
  /// RowSumViolation, NotCommunicating).
  static GeneratorMatrix create(std::vector<std::vector<double>> rows);

  int size() const noexcept { return static_cast<int>(rows_.size()); }
  double operator()(int j, int k) const { return rows_[j][k]; }
  /// lambda_j = -lambda_jj; zero only in the single-regime case.
  double hold_rate(int j) const { return -rows_[j][j]; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  bool operator==(const GeneratorMatrix&) const = default;

 private:
  explicit GeneratorMatrix(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}
  std::vector<std::vector<double>> rows_;
};

/// Transition law of the chain observed at its jump times.
/// A single-regime generator yields the absorbing sentinel: P = [[1]], rate 0.
struct EmbeddedChain {
  std::vector<std::vector<double>> P;
  std::vector<double> hold_rate;
  bool absorbing = false;

  bool operator==(const EmbeddedChain&) const = default;
};

struct RegimeParams {
  std::vector<double> a;
  std::vector<double> sigma;

  int size() const noexcept { return static_cast<int>(a.size()); }
  /// Log-price drift a_k - sigma_k^2 / 2.
  double kappa(int k) const { return a[k] - 0.5 * sigma[k] * sigma[k]; }

  bool operator==(const RegimeParams&) const = default;
};

/// Log-price drift of regime k. Throws std::out_of_range for a bad index.
double kappa_of(const RegimeParams& regimes, int k);

enum class ClaimKind { Exponential, Gamma, Uniform, DoubleExponential };

/// Claim magnitude law. One-sided kinds describe |xi|; the sign comes from
/// the business variant. DoubleExponential is the two-sided law used by
/// the mixed model (up with probability p_up).
struct ClaimLaw {
  ClaimKind kind = ClaimKind::Exponential;
  double mu = 1.0;
  double shape = 1.0;
  double scale = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double p_up = 0.5;
  double mu_up = 1.0;
  double mu_down = 1.0;

  bool is_exponential() const noexcept { return kind == ClaimKind::Exponential; }
  bool operator==(const ClaimLaw&) const = default;
};

enum class Variant { NonLife, Annuity, Mixed };

std::string_view to_string(Variant v);
std::string_view to_string(ClaimKind k);

struct BusinessParams {
  double c = 0.0;
  double alpha = 1.0;
  ClaimLaw claims;
  Variant variant = Variant::NonLife;

  bool operator==(const BusinessParams&) const = default;
};

/// +1 when claims move the reserve up, -1 when down. Mixed has no single
/// direction and returns 0.
int jump_direction(const BusinessParams& business);

struct Numerics {
  double mc_step = 1.0 / 256.0;
  int quad_nodes = 64;
  int bvp_points = 400;
  double bvp_stretch = 6.0;
  double bvp_u_min = 0.1;
  double bvp_u_max = 10.0;
  double horizon = 200.0;
  std::int64_t n_paths = 100000;
  /// Reserve level above which inter-claim segments use far_field_step.
  /// Non-positive disables the coarse stepping.
  double far_field_level = 1.0e3;
  double far_field_step = 0.25;

  bool operator==(const Numerics&) const = default;
};

struct ModelConfig {
  GeneratorMatrix generator;
  RegimeParams regimes;
  BusinessParams business;
  Numerics numerics;
  std::uint64_t seed = 0;
  bool allow_degenerate = false;
  EmbeddedChain chain;

  int regime_count() const noexcept { return generator.size(); }
  bool operator==(const ModelConfig&) const = default;
};

ModelConfig validate_config(const Json& raw);
/// Parsed but unvalidated config file; throws ConfigError(ParseError).
Json read_config_json(const std::filesystem::path& path);
ModelConfig load_config(const std::filesystem::path& path);
Json to_json(const ModelConfig& config);

/// Signed jump law of the business process, derived from claims + variant.
class JumpLaw {
 public:
  explicit JumpLaw(const BusinessParams& business);

  double density(double x) const;
  double cdf(double x) const;
  /// P(jump > x), computed without cancellation.
  double upper_tail(double x) const;
  /// Support bounds of the signed jump (may be infinite).
  double support_lo() const noexcept { return lo_; }
  double support_hi() const noexcept { return hi_; }
  /// Points where the density is not smooth, within the support.
  const std::vector<double>& kinks() const noexcept { return kinks_; }
  bool has_up() const noexcept { return hi_ > 0.0; }
  bool has_down() const noexcept { return lo_ < 0.0; }
  const ClaimLaw& law() const noexcept { return law_; }
  Variant variant() const noexcept { return variant_; }

 private:
  ClaimLaw law_;
  Variant variant_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> kinks_;
};

}  // namespace ruinlab
