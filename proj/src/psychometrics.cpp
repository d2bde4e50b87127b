#include "ratingcbc/psychometrics.hpp"

#include "ratingcbc/csv.hpp"
#include "ratingcbc/error.hpp"
#include "ratingcbc/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace ratingcbc {

std::string_view to_string(Dimension d) {
  switch (d) {
  case Dimension::alternative_search: return "alternative_search";
  case Dimension::decision_difficulty: return "decision_difficulty";
  case Dimension::high_standards: return "high_standards";
  case Dimension::overall: return "overall";
  }
  return "overall";
}

Dimension parse_dimension(std::string_view text) {
  for (auto d : {Dimension::alternative_search, Dimension::decision_difficulty, Dimension::high_standards,
                 Dimension::overall})
    if (to_string(d) == text) return d;
  throw ValidationError(fmt::format("unknown scale dimension '{}'", text));
}

double MaximizationProfile::score(Dimension d) const {
  return d == Dimension::overall ? overall : subscales[static_cast<std::size_t>(d)];
}

void validate(const ScaleResponse& response) {
  for (std::size_t i = 0; i < response.items.size(); ++i) {
    const int v = response.items[i];
    if (v < 1 || v > 7)
      throw ValidationError(fmt::format("respondent '{}' item {} = {} outside 1..7", response.respondent_id,
                                        i + 1, v));
  }
}

std::vector<MaximizationProfile> score(std::span<const ScaleResponse> responses) {
  std::vector<MaximizationProfile> out;
  out.reserve(responses.size());
  for (const auto& r : responses) {
    validate(r);
    MaximizationProfile p;
    p.respondent_id = r.respondent_id;
    int total = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const int pair = r.items[2 * s] + r.items[2 * s + 1];
      p.subscales[s] = pair / 2.0;
      total += pair;
    }
    p.overall = total / 6.0;
    out.push_back(std::move(p));
  }
  return out;
}

double cronbach_alpha(const Matrix& items) {
  const std::size_t n = items.rows();
  const std::size_t k = items.cols();
  if (n < 2 || k < 2) throw ValidationError("cronbach's alpha needs at least 2 respondents and 2 items");
  // n^2 * variance as n*sum(x^2) - sum(x)^2: exact for integer responses, so
  // duplicated items give exactly 1
  const double nd = static_cast<double>(n);
  auto scaled_variance = [&](auto value) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double x = value(r);
      s1 += x;
      s2 += x * x;
    }
    return nd * s2 - s1 * s1;
  };
  double item_var = 0.0;
  for (std::size_t c = 0; c < k; ++c) item_var += scaled_variance([&](std::size_t r) { return items(r, c); });
  const double total_var = scaled_variance([&](std::size_t r) {
    double t = 0.0;
    for (std::size_t c = 0; c < k; ++c) t += items(r, c);
    return t;
  });
  if (total_var <= 0.0) throw ValidationError("cronbach's alpha undefined: total score has zero variance");
  const double kd = static_cast<double>(k);
  return kd * (total_var - item_var) / ((kd - 1.0) * total_var);
}

Matrix item_matrix(std::span<const ScaleResponse> responses, Dimension d) {
  const std::size_t first = d == Dimension::overall ? 0 : 2 * static_cast<std::size_t>(d);
  const std::size_t k = d == Dimension::overall ? 6 : 2;
  Matrix m(responses.size(), k);
  for (std::size_t r = 0; r < responses.size(); ++r)
    for (std::size_t c = 0; c < k; ++c) m(r, c) = responses[r].items[first + c];
  return m;
}

SplitAssignment median_split(std::span<const MaximizationProfile> profiles, Dimension d) {
  if (profiles.size() < 2) throw ValidationError("median split needs at least two respondents");
  std::vector<double> scores;
  for (const auto& p : profiles) scores.push_back(p.score(d));
  std::sort(scores.begin(), scores.end());
  const std::size_t idx = (scores.size() + 1) / 2; // ceil(n/2), 1-based

  SplitAssignment split;
  split.dimension = d;
  split.split_value = scores[idx - 1];
  for (const auto& p : profiles) {
    const Group g = p.score(d) > split.split_value ? Group::High : Group::Low;
    if (!split.groups.emplace(p.respondent_id, g).second)
      throw ValidationError(fmt::format("respondent '{}' scored twice", p.respondent_id));
    ++(g == Group::High ? split.n_high : split.n_low);
  }
  split.degenerate = split.n_high == 0 || split.n_low == 0;
  return split;
}

std::vector<ScaleResponse> read_responses_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header({"respondent_id", "item1", "item2", "item3", "item4", "item5", "item6"});
  std::vector<ScaleResponse> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 7) reader.fail(fmt::format("expected 7 fields, got {}", f.size()));
    ScaleResponse r;
    r.respondent_id = f[0];
    for (std::size_t i = 0; i < 6; ++i) {
      const long long v = parse_integer(f[i + 1], reader);
      if (v < 1 || v > 7) reader.fail(fmt::format("item{} = {} outside 1..7", i + 1, v));
      r.items[i] = static_cast<int>(v);
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ValidationError(fmt::format("{}: no responses", source));
  return out;
}

std::vector<ScaleResponse> read_responses_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open responses file '{}'", path.string()));
  return read_responses_csv(in, path.string());
}

void write_responses_csv(std::ostream& out, std::span<const ScaleResponse> responses) {
  out << "respondent_id,item1,item2,item3,item4,item5,item6\n";
  for (const auto& r : responses) {
    out << r.respondent_id;
    for (int v : r.items) out << ',' << v;
    out << '\n';
  }
}

void write_profiles_csv(std::ostream& out, std::span<const MaximizationProfile> profiles) {
  out << "respondent_id,alt_search,decision_difficulty,high_standards,overall\n";
  for (const auto& p : profiles)
    out << fmt::format("{},{},{},{},{}\n", p.respondent_id, p.subscales[0], p.subscales[1], p.subscales[2],
                       p.overall);
}

void write_split_csv(std::ostream& out, const SplitAssignment& split) {
  out << "respondent_id,group\n";
  for (const auto& [id, g] : split.groups) out << id << ',' << to_string(g) << '\n';
}

std::map<std::string, Group> read_split_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header({"respondent_id", "group"});
  std::map<std::string, Group> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 2) reader.fail(fmt::format("expected 2 fields, got {}", f.size()));
    try {
      if (!out.emplace(f[0], parse_group(f[1])).second) reader.fail("duplicate respondent");
    } catch (const ValidationError& e) {
      reader.fail(e.what());
    }
  }
  if (out.empty()) throw ValidationError(fmt::format("{}: no group assignments", source));
  return out;
}

std::map<std::string, Group> read_split_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open split file '{}'", path.string()));
  return read_split_csv(in, path.string());
}

std::vector<ScaleResponse> synthetic_scale_responses(std::size_t n, std::uint64_t seed) {
  std::vector<ScaleResponse> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng({seed, static_cast<std::uint64_t>(i)});
    ScaleResponse r;
    r.respondent_id = fmt::format("R{:03}", i + 1);
    for (std::size_t s = 0; s < 3; ++s) {
      const double trait = rng.uniform(2.0, 6.0);
      for (std::size_t j = 0; j < 2; ++j) {
        const double v = std::round(trait + rng.uniform(-1.5, 1.5));
        r.items[2 * s + j] = static_cast<int>(std::clamp(v, 1.0, 7.0));
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace ratingcbc
