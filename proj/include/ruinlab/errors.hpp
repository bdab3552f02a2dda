#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ruinlab {

/// Reasons a raw configuration is rejected by validate_config.
enum class ConfigErrorKind {
  ParseError,
  DimensionMismatch,
  RowSumViolation,
  NegativeOffDiagonal,
  NotCommunicating,
  NonPositiveSigma,
  NoRuinPossible,
  BadClaimDensity,
  SignConvention,
  BadNumerics,
};

std::string_view to_string(ConfigErrorKind kind);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ConfigErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ConfigErrorKind kind_;
};

/// Failures of a numerical method (quadrature, collocation) on valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ruinlab
