#include "ratingcbc/ratings.hpp"

#include "ratingcbc/csv.hpp"
#include "ratingcbc/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

namespace ratingcbc {

namespace {
__extension__ typedef __int128 wide_int;
} // namespace

Moments moments_from_power_sums(std::int64_t n, std::int64_t s1, std::int64_t s2, std::int64_t s3) {
  Moments m;
  if (n <= 0) return m;
  const wide_int wn = n;
  const wide_int w1 = s1;
  const wide_int num2 = wn * s2 - w1 * w1;                                  // n^2 * m2
  const wide_int num3 = wn * wn * s3 - 3 * wn * w1 * s2 + 2 * w1 * w1 * w1; // n^3 * m3
  const double dn = static_cast<double>(n);
  m.mean = static_cast<double>(s1) / dn;
  m.variance = static_cast<double>(num2) / (dn * dn);
  if (num2 > 0 && n >= 3) {
    const double d2 = static_cast<double>(num2);
    m.skewness = static_cast<double>(num3) / (d2 * std::sqrt(d2));
  }
  return m;
}

std::int64_t RatingHistogram::n() const {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

Moments RatingHistogram::moments() const {
  std::int64_t s1 = 0, s2 = 0, s3 = 0;
  for (std::int64_t k = 1; k <= 5; ++k) {
    const auto c = counts[static_cast<std::size_t>(k - 1)];
    s1 += c * k;
    s2 += c * k * k;
    s3 += c * k * k * k;
  }
  return moments_from_power_sums(n(), s1, s2, s3);
}

std::array<int, 5> RatingHistogram::percentages() const {
  std::array<int, 5> out{};
  const auto total = n();
  if (total == 0) return out;
  for (std::size_t k = 0; k < 5; ++k)
    out[k] = static_cast<int>(std::lround(100.0 * static_cast<double>(counts[k]) / static_cast<double>(total)));
  return out;
}

std::vector<RatingRecord> read_ratings_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header({"user_id", "item_id", "rating"});
  std::vector<RatingRecord> records;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != 3) reader.fail(fmt::format("expected 3 fields, got {}", fields.size()));
    if (fields[0].empty() || fields[1].empty()) reader.fail("empty user_id or item_id");
    const long long r = parse_integer(fields[2], reader);
    if (r < 1 || r > 5) reader.fail(fmt::format("rating {} outside 1..5", r));
    records.push_back({fields[0], fields[1], static_cast<int>(r)});
  }
  if (records.empty()) throw ValidationError(fmt::format("{}: empty input (no ratings)", source));
  return records;
}

std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open ratings file '{}'", path.string()));
  return read_ratings_csv(in, path.string());
}

void write_ratings_csv(std::ostream& out, std::span<const RatingRecord> records) {
  out << "user_id,item_id,rating\n";
  for (const auto& r : records) out << r.user_id << ',' << r.item_id << ',' << r.rating << '\n';
}

std::map<std::string, ItemStats> compute_item_stats(std::span<const RatingRecord> records,
                                                   MomentConvention convention) {
  if (records.empty()) throw ValidationError("no ratings to summarize");
  struct Sums {
    std::int64_t n = 0, s1 = 0, s2 = 0, s3 = 0;
  };
  std::map<std::string, Sums> sums;
  for (const auto& r : records) {
    if (r.rating < 1 || r.rating > 5)
      throw ValidationError(fmt::format("rating {} for item '{}' outside 1..5", r.rating, r.item_id));
    auto& s = sums[r.item_id];
    const std::int64_t x = r.rating;
    ++s.n;
    s.s1 += x;
    s.s2 += x * x;
    s.s3 += x * x * x;
  }

  std::map<std::string, ItemStats> out;
  for (const auto& [id, s] : sums) {
    const Moments m = moments_from_power_sums(s.n, s.s1, s.s2, s.s3);
    ItemStats st;
    st.item_id = id;
    st.count = s.n;
    st.mean = m.mean;
    if (convention == MomentConvention::population) {
      st.variance = m.variance;
      st.skewness = m.skewness;
    } else {
      const double n = static_cast<double>(s.n);
      if (s.n >= 2) st.variance = m.variance * n / (n - 1.0);
      if (m.skewness) st.skewness = *m.skewness * std::sqrt(n * (n - 1.0)) / (n - 2.0);
    }
    out.emplace(id, std::move(st));
  }
  return out;
}

void write_item_stats_csv(std::ostream& out, const std::map<std::string, ItemStats>& stats) {
  out << "item_id,count,mean,variance,skewness\n";
  for (const auto& [id, s] : stats) {
    out << id << ',' << s.count << ',' << fmt::format("{}", s.mean) << ',';
    if (s.variance) out << fmt::format("{}", *s.variance);
    out << ',';
    if (s.skewness) out << fmt::format("{}", *s.skewness);
    out << '\n';
  }
}

std::string_view to_string(Statistic s) {
  switch (s) {
  case Statistic::count: return "count";
  case Statistic::mean: return "mean";
  case Statistic::variance: return "variance";
  case Statistic::skewness: return "skewness";
  }
  return "count";
}

int display_decimals(Statistic s) { return s == Statistic::count ? 0 : 1; }

std::vector<double> statistic_values(const std::map<std::string, ItemStats>& stats, Statistic s) {
  std::vector<double> out;
  for (const auto& [id, st] : stats) {
    switch (s) {
    case Statistic::count: out.push_back(static_cast<double>(st.count)); break;
    case Statistic::mean: out.push_back(st.mean); break;
    case Statistic::variance:
      if (st.variance) out.push_back(*st.variance);
      break;
    case Statistic::skewness:
      if (st.skewness) out.push_back(*st.skewness);
      break;
    }
  }
  return out;
}

std::vector<double> percentile_values(std::span<const double> values, std::span<const double> ranks,
                                      int decimals) {
  if (values.empty()) throw ValidationError("percentiles of an empty sequence");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double scale = std::pow(10.0, decimals);
  std::vector<double> out;
  for (double rank : ranks) {
    if (!(rank > 0.0 && rank < 100.0))
      throw ValidationError(fmt::format("percentile rank {} outside (0,100)", rank));
    auto idx = static_cast<std::size_t>(std::ceil(rank * n / 100.0));
    idx = std::clamp<std::size_t>(idx, 1, sorted.size());
    double v = std::round(sorted[idx - 1] * scale) / scale;
    if (v == 0.0) v = 0.0; // drop negative zero
    out.push_back(v);
  }
  return out;
}

const LevelPlanEntry& LevelPlan::at(Statistic s) const {
  for (const auto& e : entries)
    if (e.statistic == s) return e;
  throw ValidationError(fmt::format("level plan has no entry for {}", to_string(s)));
}

LevelPlan build_level_plan(const std::map<std::string, ItemStats>& stats, double low_rank,
                           double high_rank) {
  if (low_rank > high_rank) throw ValidationError("low percentile rank exceeds high rank");
  LevelPlan plan;
  const std::array<double, 2> ranks{low_rank, high_rank};
  for (auto s : {Statistic::count, Statistic::mean, Statistic::variance, Statistic::skewness}) {
    const auto values = statistic_values(stats, s);
    if (values.empty())
      throw ValidationError(fmt::format("no item has a defined {}", to_string(s)));
    const auto p = percentile_values(values, ranks, display_decimals(s));
    plan.entries.push_back({s, p[0], p[1], low_rank, high_rank});
  }
  return plan;
}

LevelPlan reference_level_plan() {
  LevelPlan plan;
  plan.entries = {{Statistic::count, 20.0, 70.0, 30.0, 70.0},
                  {Statistic::mean, 3.7, 4.3, 30.0, 70.0},
                  {Statistic::variance, 0.7, 1.3, 30.0, 70.0},
                  {Statistic::skewness, -1.2, -0.5, 30.0, 70.0}};
  return plan;
}

std::vector<RankPoint> rank_distribution(const std::map<std::string, ItemStats>& stats, Statistic s) {
  if (stats.empty()) throw ValidationError("rank distribution of empty stats");
  auto values = statistic_values(stats, s);
  std::sort(values.begin(), values.end(), std::greater<>());
  std::vector<RankPoint> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({i + 1, values[i]});
  return out;
}

std::string_view to_string(SpreadInterpretation s) {
  return s == SpreadInterpretation::variance ? "variance" : "stddev";
}

SpreadInterpretation parse_spread(std::string_view text) {
  if (text == "variance") return SpreadInterpretation::variance;
  if (text == "stddev") return SpreadInterpretation::stddev;
  throw ValidationError(fmt::format("spread must be 'variance' or 'stddev', got '{}'", text));
}

namespace {

double objective_from_moments(const Moments& m, const HistogramTarget& t, SpreadInterpretation spread,
                              const MomentWeights& w) {
  const double sp = spread == SpreadInterpretation::variance ? m.variance : std::sqrt(m.variance);
  double obj = w.mean * (m.mean - t.mean) * (m.mean - t.mean) + w.spread * (sp - t.spread) * (sp - t.spread);
  if (m.skewness) obj += w.skewness * (*m.skewness - t.skewness) * (*m.skewness - t.skewness);
  return obj;
}

} // namespace

double histogram_objective(const RatingHistogram& h, const HistogramTarget& target,
                           SpreadInterpretation spread, const MomentWeights& weights) {
  return objective_from_moments(h.moments(), target, spread, weights);
}

RatingHistogram synthesize_histogram(std::int64_t n, const HistogramTarget& target,
                                     SpreadInterpretation spread, const MomentWeights& weights) {
  if (n < 1) throw ValidationError("histogram size must be at least 1");
  if (!(target.mean >= 1.0 && target.mean <= 5.0))
    throw ValidationError(fmt::format("target mean {} outside [1,5]", target.mean));

  RatingHistogram best;
  double best_obj = std::numeric_limits<double>::infinity();
  // Lexicographic enumeration with strict improvement keeps the smallest
  // counts among ties.
  for (std::int64_t a = 0; a <= n; ++a) {
    for (std::int64_t b = 0; a + b <= n; ++b) {
      for (std::int64_t c = 0; a + b + c <= n; ++c) {
        for (std::int64_t d = 0; a + b + c + d <= n; ++d) {
          const std::int64_t e = n - a - b - c - d;
          const std::int64_t s1 = a + 2 * b + 3 * c + 4 * d + 5 * e;
          const std::int64_t s2 = a + 4 * b + 9 * c + 16 * d + 25 * e;
          const std::int64_t s3 = a + 8 * b + 27 * c + 64 * d + 125 * e;
          const double obj =
              objective_from_moments(moments_from_power_sums(n, s1, s2, s3), target, spread, weights);
          if (obj < best_obj) {
            best_obj = obj;
            best.counts = {a, b, c, d, e};
          }
        }
      }
    }
  }
  return best;
}

} // namespace ratingcbc
