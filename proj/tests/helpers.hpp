#pragma once

#include "ruinlab/model.hpp"

namespace testcfg {

using ruinlab::Json;

/// Single regime without investment: the classical compound Poisson model.
inline Json classical(double c = 2.0, double alpha = 1.0, double mu = 1.0) {
  return Json{{"K", 1},
              {"lambda", {{0.0}}},
              {"a", {0.0}},
              {"sigma", {0.0}},
              {"allow_degenerate", true},
              {"c", c},
              {"alpha", alpha},
              {"claims", {{"kind", "exponential"}, {"mu", mu}}},
              {"variant", "NonLife"}};
}

/// Two regimes with investment; the cross-validation scenario.
inline Json two_regime() {
  return Json{{"K", 2},
              {"lambda", {{-2.0, 2.0}, {3.0, -3.0}}},
              {"a", {0.1, 0.6}},
              {"sigma", {0.4, 1.0}},
              {"c", 1.5},
              {"alpha", 1.0},
              {"claims", {{"kind", "exponential"}, {"mu", 1.0}}},
              {"variant", "NonLife"}};
}

/// Single regime with sigma = 1, a = 0.5, c = 1.
inline Json one_regime_diffusive(double a = 0.5, double sigma = 1.0, double c = 1.0) {
  return Json{{"K", 1},
              {"lambda", {{0.0}}},
              {"a", {a}},
              {"sigma", {sigma}},
              {"c", c},
              {"alpha", 1.0},
              {"claims", {{"kind", "exponential"}, {"mu", 1.0}}},
              {"variant", "NonLife"}};
}

inline ruinlab::ModelConfig make(const Json& j) { return ruinlab::validate_config(j); }

}  // namespace testcfg
