#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ruinlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitCompareFail = 3;
inline constexpr int kExitUsage = 64;

/// Subcommands: simulate, solve, residual, compare, report. `args` excludes
/// the program name. Outputs named by --out are written atomically next to
/// a manifest; without --out, CSV goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace ruinlab::cli
