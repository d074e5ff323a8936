#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eventimp {

/// A caller broke a documented precondition or an application contract.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input data (files, configuration, model output) is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  DataError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line number, or 0 when the error is not tied to a line.
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Exhaustive enumeration would visit more paths than allowed.
class PathGuardExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eventimp
