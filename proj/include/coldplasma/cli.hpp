#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coldplasma::cli {

/// Exit codes: 0 success, 1 computation failed, 2 usage or validation error.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out` unless an output file is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coldplasma::cli
