#include "ratingcbc/csv.hpp"

#include "ratingcbc/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <cstdlib>

namespace ratingcbc {

CsvReader::CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

void CsvReader::fail(std::string_view message) const {
  throw ValidationError(fmt::format("{}:{}: {}", source_, line_, message));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    std::string_view f = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    out.emplace_back(f);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    fields = split_fields(raw);
    return true;
  }
  return false;
}

void CsvReader::expect_header(const std::vector<std::string>& expected) {
  std::vector<std::string> header;
  if (!next(header)) throw ValidationError(fmt::format("{}: empty input", source_));
  if (header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    fail(fmt::format("expected header '{}'", want));
  }
}

long long parse_integer(std::string_view text, const CsvReader& ctx) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty())
    ctx.fail(fmt::format("'{}' is not an integer", text));
  return value;
}

double parse_real(std::string_view text, const CsvReader& ctx) {
  // from_chars for double is missing on older libstdc++.
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    ctx.fail(fmt::format("'{}' is not a finite number", text));
  return v;
}

} // namespace ratingcbc
