#pragma once

#include "ratingcbc/design.hpp"
#include "ratingcbc/group.hpp"
#include "ratingcbc/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ratingcbc {

/// One estimated coefficient: a non-reference level of an attribute.
struct ParameterLabel {
  std::size_t attribute = 0;
  std::size_t level = 0;
  auto operator<=>(const ParameterLabel&) const = default;
};

/// Reference-level (dummy) coding used for estimation: one 0/1 column per
/// non-reference level.
class DummyCoding {
public:
  DummyCoding(std::span<const Attribute> attributes, std::vector<std::size_t> reference_levels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<ParameterLabel>& labels() const { return labels_; }
  const std::vector<std::size_t>& reference_levels() const { return reference_; }

  std::vector<double> row(const Profile& profile) const;
  /// m x p matrix of the alternatives of one choice set.
  Matrix choice_set_rows(const Design& design, const ChoiceSet& set) const;

private:
  std::vector<std::size_t> level_counts_;
  std::vector<std::size_t> reference_;
  std::vector<ParameterLabel> labels_;
};

/// Baselines of the rating-summary attributes: All users, 20 ratings, mean
/// 3.7, variance 0.7, skewness -0.5.
std::vector<std::size_t> rating_summary_reference_levels();

struct PartWorths {
  std::vector<std::size_t> reference_levels;
  std::vector<ParameterLabel> labels;
  std::vector<double> beta;

  std::size_t size() const { return beta.size(); }
};

/// Binds `values` (in DummyCoding label order) to the coding's labels.
PartWorths make_part_worths(const DummyCoding& coding, std::vector<double> values);

/// x . beta; throws ValidationError on a length mismatch.
double deterministic_utility(std::span<const double> profile_row, const PartWorths& beta);

/// Softmax of the rows' utilities with max-subtraction.
std::vector<double> choice_probabilities(const Matrix& choice_set_rows, const PartWorths& beta);

struct ChoiceObservation {
  std::string respondent_id;
  std::size_t choice_set_index = 0;
  std::size_t chosen_alternative = 0;
  bool operator==(const ChoiceObservation&) const = default;
};

struct SimConfig {
  std::size_t n_respondents = 182;
  std::uint64_t seed = 1;
  bool randomize_order = true;
};

/// Respondent ids R001, R002, ... for simulated samples.
std::vector<std::string> default_respondent_ids(std::size_t n);

/// Draws one choice per respondent and choice set from the logit
/// probabilities. Respondent r uses the stream (seed, r), so each respondent's
/// choices do not depend on how many others are simulated.
std::vector<ChoiceObservation> simulate_choices(const Design& design, const PartWorths& beta,
                                                const SimConfig& config);
std::vector<ChoiceObservation> simulate_choices(const Design& design, const PartWorths& beta,
                                                std::span<const std::string> respondent_ids,
                                                std::uint64_t seed, bool randomize_order);

std::vector<ChoiceObservation> read_observations_csv(std::istream& in, const std::string& source);
std::vector<ChoiceObservation> read_observations_csv(const std::filesystem::path& path);
void write_observations_csv(std::ostream& out, std::span<const ChoiceObservation> observations);

struct FitOptions {
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 100;
  /// |beta| beyond this with a non-vanishing gradient signals separation.
  double separation_threshold = 15.0;
};

struct MnlFit {
  PartWorths estimates;
  std::vector<double> std_errors;
  std::vector<double> z_values;
  std::vector<double> p_values;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  double mcfadden_r2 = 0.0;
  double lr_statistic = 0.0;
  std::size_t lr_df = 0;
  double lr_p_value = 1.0;
  bool converged = false;
  /// Coefficients diverging under complete or quasi-complete separation.
  bool separation = false;
  std::vector<ParameterLabel> diverging;
  std::size_t iterations = 0;
  std::size_t n_observations = 0;
  double gradient_max_norm = 0.0;
  /// Log-likelihood after each accepted Newton step, starting at beta = 0.
  std::vector<double> ll_trace;
};

/// Log-likelihood of the observations under `beta`.
double log_likelihood(const Design& design, std::span<const ChoiceObservation> observations,
                      const PartWorths& beta);

/// Maximum likelihood by Newton-Raphson with step halving. Throws
/// NumericalError naming the collinear columns when the information matrix is
/// singular; separation is reported through the returned flags.
MnlFit fit_mnl(const Design& design, std::span<const ChoiceObservation> observations,
               std::span<const std::size_t> reference_levels, const FitOptions& options = {});

/// Independent fits per group. Every observed respondent must be assigned and
/// every group that appears in `grouping` must have observations.
std::map<Group, MnlFit> subgroup_fit(const Design& design, std::span<const ChoiceObservation> observations,
                                     const std::map<std::string, Group>& grouping,
                                     std::span<const std::size_t> reference_levels,
                                     const FitOptions& options = {});

/// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, else empty.
std::string_view significance_stars(double p_value);

/// Two-sided normal tail probability.
double two_sided_normal_p(double z);
/// Upper tail of the chi-square distribution.
double chi_square_survival(double statistic, double df);

} // namespace ratingcbc
