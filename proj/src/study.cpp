#include "ratingcbc/study.hpp"

#include "ratingcbc/error.hpp"

#include <map>

namespace ratingcbc {

std::vector<Attribute> rating_summary_attributes(const LevelPlan& plan) {
  std::vector<Attribute> attrs;
  attrs.push_back({"Origin", {std::string("Similar users"), std::string("All users")}, "", AttributeRole::categorical});
  attrs.push_back({"Ratings", {plan.at(Statistic::count).low, plan.at(Statistic::count).high}, "ratings",
                   AttributeRole::count});
  attrs.push_back({"Mean", {plan.at(Statistic::mean).low, plan.at(Statistic::mean).high}, "stars", AttributeRole::mean});
  attrs.push_back({"Variance", {plan.at(Statistic::variance).low, plan.at(Statistic::variance).high}, "",
                   AttributeRole::variance});
  attrs.push_back({"Skewness", {plan.at(Statistic::skewness).low, plan.at(Statistic::skewness).high}, "",
                   AttributeRole::skewness});
  for (const auto& a : attrs) validate(a);
  return attrs;
}

namespace {

std::optional<double> numeric_level(std::span<const Attribute> attributes, const Profile& p, AttributeRole role) {
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    if (attributes[a].role != role) continue;
    const auto& v = attributes[a].levels.at(p.levels.at(a));
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw ValidationError("attribute '" + attributes[a].name + "' needs numeric levels");
  }
  return std::nullopt;
}

} // namespace

void attach_histograms(std::span<const Attribute> attributes, std::vector<Profile>& profiles, std::int64_t n,
                       SpreadInterpretation spread, const MomentWeights& weights) {
  std::map<std::array<double, 3>, RatingHistogram> cache;
  for (auto& p : profiles) {
    const auto mean = numeric_level(attributes, p, AttributeRole::mean);
    const auto var = numeric_level(attributes, p, AttributeRole::variance);
    const auto skew = numeric_level(attributes, p, AttributeRole::skewness);
    if (!mean || !var || !skew) throw ValidationError("histograms need mean, variance and skewness attributes");
    const std::array<double, 3> key{*mean, *var, *skew};
    auto it = cache.find(key);
    if (it == cache.end()) {
      const HistogramTarget target{*mean, *var, *skew};
      it = cache.emplace(key, synthesize_histogram(n, target, spread, weights)).first;
    }
    p.histogram = it->second;
  }
}

PublishedEstimate published_all_respondents() {
  return {{0.37, 0.89, 1.18, -0.18, 0.02}, {0.05, 0.05, 0.05, 0.05, 0.05}};
}

PublishedEstimate published_subgroup(Dimension d, Group g) {
  const bool high = g == Group::High;
  switch (d) {
  case Dimension::overall:
    return high ? PublishedEstimate{{0.34, 0.72, 1.14, -0.18, -0.03}, {0.07, 0.07, 0.07, 0.07, 0.07}}
                : PublishedEstimate{{0.39, 1.04, 1.23, -0.17, 0.06}, {0.07, 0.07, 0.07, 0.07, 0.06}};
  case Dimension::alternative_search:
    return high ? PublishedEstimate{{0.51, 0.83, 1.05, -0.25, 0.01}, {0.07, 0.07, 0.07, 0.07, 0.07}}
                : PublishedEstimate{{0.25, 0.95, 1.29, -0.11, 0.03}, {0.07, 0.07, 0.07, 0.07, 0.06}};
  case Dimension::decision_difficulty:
    return high ? PublishedEstimate{{0.29, 0.80, 1.31, -0.24, 0.02}, {0.08, 0.08, 0.08, 0.08, 0.07}}
                : PublishedEstimate{{0.42, 0.96, 1.09, -0.14, 0.02}, {0.06, 0.07, 0.07, 0.06, 0.06}};
  case Dimension::high_standards:
    return high ? PublishedEstimate{{0.24, 1.04, 1.30, -0.13, 0.02}, {0.08, 0.08, 0.08, 0.08, 0.07}}
                : PublishedEstimate{{0.44, 0.80, 1.12, -0.20, 0.02}, {0.06, 0.06, 0.06, 0.06, 0.06}};
  }
  throw ValidationError("unknown dimension");
}

} // namespace ratingcbc
