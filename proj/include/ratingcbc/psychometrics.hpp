#pragma once

#include "ratingcbc/group.hpp"
#include "ratingcbc/linalg.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ratingcbc {

/// Maximization-scale dimensions. Items come in pairs: (1,2) alternative
/// search, (3,4) decision difficulty, (5,6) high standards.
enum class Dimension { alternative_search, decision_difficulty, high_standards, overall };

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view text);

struct ScaleResponse {
  std::string respondent_id;
  /// 7-point agreement, 1 = completely disagree.
  std::array<int, 6> items{};
};

struct MaximizationProfile {
  std::string respondent_id;
  std::array<double, 3> subscales{};
  double overall = 0.0;

  double score(Dimension d) const;
};

void validate(const ScaleResponse& response);

/// Subscale = mean of its two items; overall = mean of all six.
std::vector<MaximizationProfile> score(std::span<const ScaleResponse> responses);

/// k/(k-1) (1 - sum item variances / total-score variance), population
/// variances. Rows are respondents, columns items.
double cronbach_alpha(const Matrix& items);

/// Items of one dimension as an n x k matrix (k = 2 for subscales, 6 overall).
Matrix item_matrix(std::span<const ScaleResponse> responses, Dimension d);

struct SplitAssignment {
  Dimension dimension = Dimension::overall;
  double split_value = 0.0;
  std::map<std::string, Group> groups;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  /// One side of the split is empty.
  bool degenerate = false;
};

/// Nearest-rank median; scores strictly above it are High, the rest Low.
SplitAssignment median_split(std::span<const MaximizationProfile> profiles, Dimension d);

std::vector<ScaleResponse> read_responses_csv(std::istream& in, const std::string& source);
std::vector<ScaleResponse> read_responses_csv(const std::filesystem::path& path);
void write_responses_csv(std::ostream& out, std::span<const ScaleResponse> responses);
void write_profiles_csv(std::ostream& out, std::span<const MaximizationProfile> profiles);
void write_split_csv(std::ostream& out, const SplitAssignment& split);
std::map<std::string, Group> read_split_csv(std::istream& in, const std::string& source);
std::map<std::string, Group> read_split_csv(const std::filesystem::path& path);

/// Synthetic survey answers: one latent trait per subscale plus item noise,
/// rounded and clipped to 1..7. Ids R001.. match simulated respondents.
std::vector<ScaleResponse> synthetic_scale_responses(std::size_t n, std::uint64_t seed);

} // namespace ratingcbc
