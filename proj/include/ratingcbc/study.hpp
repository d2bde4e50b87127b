#pragma once

#include "ratingcbc/design.hpp"
#include "ratingcbc/group.hpp"
#include "ratingcbc/psychometrics.hpp"
#include "ratingcbc/ratings.hpp"

#include <array>
#include <vector>

namespace ratingcbc {

/// Origin (Similar users / All users) followed by count, mean, variance and
/// skewness with the plan's low level as L1.
std::vector<Attribute> rating_summary_attributes(const LevelPlan& plan);

/// Synthesizes an n-rating histogram for every profile from its mean,
/// variance and skewness levels.
void attach_histograms(std::span<const Attribute> attributes, std::vector<Profile>& profiles, std::int64_t n,
                       SpreadInterpretation spread = SpreadInterpretation::variance, const MomentWeights& weights = {});

/// Coefficients in DummyCoding order for the rating-summary attributes:
/// similar users, 70 ratings, mean 4.3, variance 1.3, skewness -1.2.
using SummaryBetas = std::array<double, 5>;

struct PublishedEstimate {
  SummaryBetas beta{};
  SummaryBetas std_error{};
};

PublishedEstimate published_all_respondents();
/// Median split of the given maximization dimension.
PublishedEstimate published_subgroup(Dimension d, Group g);

} // namespace ratingcbc
