#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace ratingcbc {

/// Minimal comma-separated reader: no quoting, CR stripped, blank lines skipped.
/// Enough for the id/number tables this project exchanges.
class CsvReader {
public:
  CsvReader(std::istream& in, std::string source);

  /// Reads the header and checks it against `expected` (exact column names).
  void expect_header(const std::vector<std::string>& expected);

  /// Next data row; false at end of input.
  bool next(std::vector<std::string>& fields);

  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

  /// Throws ValidationError tagged with source and current line.
  [[noreturn]] void fail(std::string_view message) const;

private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_fields(std::string_view line);

long long parse_integer(std::string_view text, const CsvReader& ctx);
double parse_real(std::string_view text, const CsvReader& ctx);

} // namespace ratingcbc
