#include "eventimp/core/csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>

#include "eventimp/core/errors.hpp"

namespace eventimp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

CsvReader::CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {
  if (!read_record(header_)) throw DataError(source_, 0, "missing header row");
  for (auto& h : header_) h = trim(h);
}

void CsvReader::require_columns(const std::vector<std::string_view>& required) const {
  for (auto name : required) {
    if (std::find(header_.begin(), header_.end(), name) == header_.end()) {
      throw DataError(source_, 1, "missing column '" + std::string(name) + "'");
    }
  }
}

bool CsvReader::read_record(std::vector<std::string>& out) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;

    out.clear();
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (quoted) {
        if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        out.push_back(std::move(field));
        field.clear();
      } else if (c != '\r') {
        field += c;
      }
    }
    if (quoted) throw DataError(source_, static_cast<std::size_t>(line_), "unterminated quote");
    out.push_back(std::move(field));
    return true;
  }
  return false;
}

bool CsvReader::next() {
  if (!read_record(row_)) return false;
  if (row_.size() != header_.size()) {
    fail("expected " + std::to_string(header_.size()) + " fields, found " +
         std::to_string(row_.size()));
  }
  return true;
}

const std::string& CsvReader::field(std::string_view column) const {
  const auto it = std::find(header_.begin(), header_.end(), column);
  if (it == header_.end()) fail("missing column '" + std::string(column) + "'");
  return row_[static_cast<std::size_t>(it - header_.begin())];
}

void CsvReader::fail(const std::string& message) const {
  throw DataError(source_, static_cast<std::size_t>(line_), message);
}

int CsvReader::to_int(std::string_view column) const {
  const std::string text = trim(field(column));
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail("column '" + std::string(column) + "': '" + text + "' is not an integer");
  }
  return value;
}

double CsvReader::to_double(std::string_view column) const {
  const std::string text = trim(field(column));
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail("column '" + std::string(column) + "': '" + text + "' is not a number");
  }
  return value;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace eventimp
