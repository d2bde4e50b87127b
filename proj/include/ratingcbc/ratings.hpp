#pragma once

#include "ratingcbc/histogram.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ratingcbc {

struct RatingRecord {
  std::string user_id;
  std::string item_id;
  int rating = 0;
};

/// CSV with header user_id,item_id,rating. Ratings outside 1..5 and malformed
/// rows are rejected with the offending line number; an empty file is an error.
std::vector<RatingRecord> read_ratings_csv(std::istream& in, const std::string& source);
std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path);
void write_ratings_csv(std::ostream& out, std::span<const RatingRecord> records);

enum class MomentConvention { population, sample };

struct ItemStats {
  std::string item_id;
  std::int64_t count = 0;
  double mean = 0.0;
  /// Always set for population moments; undefined for n < 2 under sample moments.
  std::optional<double> variance;
  std::optional<double> skewness;
};

std::map<std::string, ItemStats> compute_item_stats(std::span<const RatingRecord> records,
                                                   MomentConvention convention = MomentConvention::population);

void write_item_stats_csv(std::ostream& out, const std::map<std::string, ItemStats>& stats);

enum class Statistic { count, mean, variance, skewness };

std::string_view to_string(Statistic s);
/// Decimal places used for level values: whole numbers for counts, one otherwise.
int display_decimals(Statistic s);

/// Defined values of one statistic across items, in item-id order.
std::vector<double> statistic_values(const std::map<std::string, ItemStats>& stats, Statistic s);

/// Nearest-rank percentiles: sorted[ceil(rank/100 * n)] (1-based), each result
/// rounded to `decimals` places. Ranks must lie in (0, 100).
std::vector<double> percentile_values(std::span<const double> values, std::span<const double> ranks,
                                      int decimals);

struct LevelPlanEntry {
  Statistic statistic = Statistic::count;
  double low = 0.0;
  double high = 0.0;
  double low_rank = 30.0;
  double high_rank = 70.0;
};

struct LevelPlan {
  std::vector<LevelPlanEntry> entries;
  const LevelPlanEntry& at(Statistic s) const;
};

/// Low/high levels for count, mean, variance and skewness from item stats.
LevelPlan build_level_plan(const std::map<std::string, ItemStats>& stats, double low_rank = 30.0,
                           double high_rank = 70.0);

/// The published levels: 20/70 ratings, mean 3.7/4.3, variance 0.7/1.3,
/// skewness -1.2/-0.5.
LevelPlan reference_level_plan();

struct RankPoint {
  std::size_t rank = 0;
  double value = 0.0;
};

/// Values sorted descending with 1-based ranks; undefined values are skipped.
std::vector<RankPoint> rank_distribution(const std::map<std::string, ItemStats>& stats, Statistic s);

enum class SpreadInterpretation { variance, stddev };

std::string_view to_string(SpreadInterpretation s);
SpreadInterpretation parse_spread(std::string_view text);

struct MomentWeights {
  double mean = 10.0;
  double spread = 1.0;
  double skewness = 1.0;
};

struct HistogramTarget {
  double mean = 3.0;
  double spread = 1.0;
  double skewness = 0.0;
};

/// Weighted squared moment deviation; the skewness term is dropped when the
/// histogram's skewness is undefined.
double histogram_objective(const RatingHistogram& h, const HistogramTarget& target,
                           SpreadInterpretation spread, const MomentWeights& weights);

/// Exhaustive search over all compositions of n into five counts for the
/// minimum of histogram_objective; ties go to the lexicographically smallest
/// counts.
RatingHistogram synthesize_histogram(std::int64_t n, const HistogramTarget& target,
                                     SpreadInterpretation spread = SpreadInterpretation::variance,
                                     const MomentWeights& weights = {});

/// Synthetic stand-in for the hotel crawl: 40 items rated by 150 users whose
/// 30th/70th percentiles reproduce the published level values.
std::vector<RatingRecord> synthetic_hotel_ratings();

} // namespace ratingcbc
