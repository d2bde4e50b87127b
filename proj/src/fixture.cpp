#include "ratingcbc/ratings.hpp"

#include <fmt/format.h>

#include <array>

namespace ratingcbc {

namespace {

// Per-item star counts (1..5). Constructed so that, at the 30th/70th
// nearest-rank percentiles over the 40 items, count = 20/70, mean rounds to
// 3.7/4.3 (3.6875, 4.2845), variance to 0.7/1.3 (0.7208, 1.3056) and skewness
// to -1.2/-0.5 (-1.2099, -0.4823).
constexpr std::array<std::array<int, 5>, 40> kItemHistograms{{
    {0, 0, 1, 3, 2},    {0, 1, 0, 5, 2},    {1, 0, 2, 1, 5},    {1, 0, 1, 6, 3},
    {0, 2, 3, 2, 5},    {0, 0, 0, 2, 11},   {0, 0, 0, 4, 10},   {0, 0, 0, 6, 9},
    {3, 2, 1, 1, 9},    {0, 1, 5, 10, 1},   {1, 0, 0, 6, 11},   {1, 2, 3, 7, 7},
    {1, 0, 3, 2, 16},   {0, 0, 7, 11, 7},   {1, 5, 0, 13, 8},   {1, 0, 8, 1, 20},
    {1, 10, 0, 10, 12}, {5, 0, 13, 5, 13},  {0, 5, 12, 20, 2},  {0, 1, 0, 25, 16},
    {5, 7, 1, 22, 10},  {0, 26, 0, 20, 2},  {0, 7, 7, 8, 30},   {1, 7, 17, 20, 11},
    {3, 11, 28, 17, 1}, {4, 1, 0, 22, 36},  {1, 0, 10, 6, 50},  {6, 18, 3, 30, 13},
    {0, 11, 0, 12, 51}, {0, 1, 31, 9, 37},  {20, 0, 0, 11, 52}, {14, 22, 0, 39, 13},
    {0, 7, 6, 35, 45},  {1, 0, 11, 32, 54}, {0, 0, 3, 34, 67},  {17, 8, 3, 39, 43},
    {5, 0, 0, 63, 48},  {47, 18, 1, 11, 45}, {0, 9, 22, 83, 16}, {5, 0, 18, 53, 62},
}};

constexpr int kUsers = 150;

} // namespace

std::vector<RatingRecord> synthetic_hotel_ratings() {
  std::vector<RatingRecord> records;
  for (std::size_t j = 0; j < kItemHistograms.size(); ++j) {
    const auto item = fmt::format("H{:02}", j + 1);
    int t = 0;
    for (int star = 1; star <= 5; ++star) {
      for (int c = 0; c < kItemHistograms[j][static_cast<std::size_t>(star - 1)]; ++c, ++t) {
        // 7 is coprime with 150, so an item never reaches the same user twice.
        const int user = static_cast<int>((static_cast<int>(j) * 37 + t * 7) % kUsers);
        records.push_back({fmt::format("U{:03}", user + 1), item, star});
      }
    }
  }
  return records;
}

} // namespace ratingcbc
