#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace ratingcbc {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  /// Undefined for a degenerate distribution or fewer than three ratings.
  std::optional<double> skewness;
};

/// Population moments from integer power sums s_k = sum of rating^k.
/// Central-moment numerators are formed in exact integer arithmetic, so equal
/// power sums always give bit-identical moments.
Moments moments_from_power_sums(std::int64_t n, std::int64_t s1, std::int64_t s2, std::int64_t s3);

/// Counts of 1..5 star ratings (Terrible, Poor, Average, Very good, Excellent).
struct RatingHistogram {
  std::array<std::int64_t, 5> counts{};

  std::int64_t n() const;
  Moments moments() const;
  /// Shares rounded to whole percent.
  std::array<int, 5> percentages() const;

  auto operator<=>(const RatingHistogram&) const = default;
};

} // namespace ratingcbc
