#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace eventimp {

/// Rows of a comma-separated file with a header. Fields may be quoted with
/// double quotes; "" inside quotes is a literal quote. Blank lines and lines
/// starting with '#' are skipped.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source);

  /// Throws DataError unless the header contains every name in `required`.
  void require_columns(const std::vector<std::string_view>& required) const;

  /// Next data row; false at end of input.
  bool next();

  [[nodiscard]] const std::string& field(std::string_view column) const;
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] const std::string& source() const { return source_; }

  /// DataError pointing at the current line.
  [[noreturn]] void fail(const std::string& message) const;

  [[nodiscard]] int to_int(std::string_view column) const;
  [[nodiscard]] double to_double(std::string_view column) const;

 private:
  bool read_record(std::vector<std::string>& out);

  std::istream& in_;
  std::string source_;
  int line_ = 0;
  std::vector<std::string> header_;
  std::vector<std::string> row_;
};

/// Quotes a field when it contains a comma, quote, or newline.
std::string csv_escape(std::string_view field);

}  // namespace eventimp
