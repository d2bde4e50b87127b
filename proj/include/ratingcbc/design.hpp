#pragma once

#include "ratingcbc/histogram.hpp"
#include "ratingcbc/linalg.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ratingcbc {

/// What an attribute measures. Numeric roles drive display precision and
/// histogram synthesis.
enum class AttributeRole { categorical, count, mean, variance, skewness, numeric };

std::string_view to_string(AttributeRole role);
AttributeRole parse_attribute_role(std::string_view text);

/// Either a categorical label or a numeric value (unit lives on the attribute).
using LevelValue = std::variant<std::string, double>;

struct Attribute {
  std::string name;
  /// Index 0 is the first level (L1).
  std::vector<LevelValue> levels;
  std::string display_unit;
  AttributeRole role = AttributeRole::categorical;

  std::size_t level_count() const { return levels.size(); }
  std::string level_label(std::size_t level) const;
};

/// Throws ValidationError on duplicate or non-finite levels, fewer than two
/// levels, or mean levels outside [1,5].
void validate(const Attribute& attribute);

struct Profile {
  int id = 0;
  /// One level index per attribute, in attribute order.
  std::vector<std::size_t> levels;
  std::optional<RatingHistogram> histogram;
};

struct ChoiceSet {
  std::vector<int> profile_ids;
};

struct Design {
  std::vector<Attribute> attributes;
  /// Profile pool referenced by the choice sets.
  std::vector<Profile> profiles;
  std::vector<ChoiceSet> choice_sets;
  std::uint64_t seed = 0;

  const Profile& profile(int id) const;
  std::size_t alternatives() const;
  /// Number of coded rows: sets times alternatives.
  std::size_t observations() const;
};

void validate(const Design& design);

enum class Coding { indicator, contrast };

struct ColumnLabel {
  std::size_t attribute = 0;
  /// Level index for indicator coding, contrast index for contrast coding.
  std::size_t level = 0;
};

struct DesignMatrix {
  Matrix rows;
  Coding coding = Coding::contrast;
  std::vector<ColumnLabel> columns;
  /// Free parameters: sum over attributes of (levels - 1).
  std::size_t parameters = 0;
};

struct DesignDiagnostics {
  double d_efficiency = 0.0;
  std::size_t level_balance_deviation = 0;
  double orthogonality_max_corr = 0.0;
  std::size_t overlap_total = 0;
};

/// All level combinations, lexicographic in level index with the last
/// attribute varying fastest; ids 1..K.
std::vector<Profile> enumerate_full_factorial(std::span<const Attribute> attributes);

/// Standardized orthogonal contrasts for an attribute with `levels` levels:
/// a levels x (levels-1) matrix whose columns are orthogonal, sum to zero and
/// have sum of squares equal to `levels`. For two levels this is (+1, -1).
Matrix orthogonal_contrasts(std::size_t levels);

/// One row per profile occurrence, in choice-set order.
DesignMatrix encode(const Design& design, Coding coding);

/// 100 / (N |(X'X)^-1|^(1/p)) on a contrast-coded matrix. Throws
/// NumericalError when X'X is singular and ValidationError for other codings.
double d_efficiency(const DesignMatrix& matrix);

DesignDiagnostics diagnostics(const Design& design);

struct ChoiceSetOptions {
  std::size_t n_sets = 16;
  std::size_t m = 2;
  std::uint64_t seed = 1;
  std::size_t max_iters = 1000;
};

/// Partitions profiles into choice sets. A complete two-level factorial with
/// m = 2 that uses every profile gets the complementary (fold-over) pairing;
/// anything else goes through a steepest-ascent swap search.
Design build_choice_sets(std::span<const Attribute> attributes, std::span<const Profile> profiles,
                         const ChoiceSetOptions& options);

} // namespace ratingcbc
