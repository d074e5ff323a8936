#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eventimp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kInternal = 3,
  kOracleMismatch = 4,
};

/// Runs the command line. Diagnostics and progress go to `err`; reports that
/// have no --out file go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Locale-independent fixed notation.
std::string format_fixed(double value, int decimals = 6);

}  // namespace eventimp::cli
