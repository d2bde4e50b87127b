#pragma once

#include "ratingcbc/linalg.hpp"
#include "ratingcbc/ratings.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ratingcbc {

struct RatingEntry {
  std::size_t user = 0;
  std::size_t item = 0;
  double rating = 0.0;
};

/// Sparse user x item ratings with dense indices.
class RatingMatrix {
public:
  RatingMatrix(std::size_t n_users, std::size_t n_items, std::vector<RatingEntry> entries);

  /// Users and items indexed in sorted id order.
  static RatingMatrix from_records(std::span<const RatingRecord> records);

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  const std::vector<RatingEntry>& entries() const { return entries_; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  std::optional<std::size_t> user_index(const std::string& id) const;

private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::vector<RatingEntry> entries_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
};

/// Order: number of ratings, mean, variance.
using AttributeTriple = std::array<double, 3>;

struct Normalization {
  AttributeTriple shift{0.0, 0.0, 0.0};
  AttributeTriple scale{1.0, 1.0, 1.0};
};

struct UtilityParams {
  /// One weight triple per user, or a single triple shared by all users.
  std::vector<AttributeTriple> gamma;
  Normalization normalization;

  const AttributeTriple& gamma_for(std::size_t user) const;
};

/// z-score parameters over the items with a defined variance.
Normalization zscore_normalization(std::span<const ItemStats> items);

/// Converts logit part-worths for the high-vs-low level contrast into weights
/// on z-scored attributes: beta / level gap * attribute scale.
AttributeTriple gamma_from_part_worths(const AttributeTriple& betas, const AttributeTriple& level_gaps,
                                       const Normalization& normalization);

/// Level gaps of the published plan: 50 ratings, 0.6 mean, 0.6 variance.
AttributeTriple reference_level_gaps();

/// Weighted sum over normalized attributes; empty when the variance is undefined.
std::optional<double> raw_item_utility(const UtilityParams& params, const ItemStats& stats, std::size_t user);

/// Utilities of all candidate items for one user, min-max rescaled to [0,1].
/// Excluded items stay empty; if all remaining values are equal they map to 0.
std::vector<std::optional<double>> item_utilities(const UtilityParams& params, std::span<const ItemStats> items,
                                                  std::size_t user);

/// n_users x n_items table of rescaled utilities (excluded items = 0).
Matrix utility_table(const UtilityParams& params, std::span<const ItemStats> items, std::size_t n_users);

/// Item stats aligned with the matrix's item indices.
std::vector<ItemStats> stats_in_item_order(const RatingMatrix& data, const std::map<std::string, ItemStats>& stats);

struct Hyperparams {
  double phi = 0.05;
  double delta = 0.5;
  double learning_rate = 0.005;
  std::size_t epochs = 300;
  std::size_t k = 2;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
};

void validate(const Hyperparams& h);

struct FactorModel {
  std::size_t k = 0;
  Matrix P; // users x k
  Matrix Q; // items x k
};

double predict(const FactorModel& model, std::size_t user, std::size_t item);
/// Prediction clipped to the 1..5 rating scale, for reporting.
double predict_clamped(const FactorModel& model, std::size_t user, std::size_t item);

/// Sum over observed ratings of squared error plus phi/2 (|p|^2 + |q|^2) plus
/// delta/2 |p - q|^2 u; both penalties are charged once per rating.
double loss(const FactorModel& model, const RatingMatrix& data, const Matrix& utility, const Hyperparams& h);

/// Plain regularized MF objective (no utility term).
double baseline_mf_loss(const FactorModel& model, const RatingMatrix& data, double phi);

struct LossGradient {
  Matrix P;
  Matrix Q;
};

/// Analytic gradient of loss() with respect to P and Q.
LossGradient loss_gradient(const FactorModel& model, const RatingMatrix& data, const Matrix& utility,
                           const Hyperparams& h);

struct TrainResult {
  FactorModel model;
  /// Full-batch loss after each epoch.
  std::vector<double> loss_trace;
};

/// Uniform init in [-init_scale, init_scale], then per-rating SGD steps in a
/// seeded shuffle each epoch. Throws NumericalError if the loss blows up.
TrainResult train_sgd(const RatingMatrix& data, const Matrix& utility, const Hyperparams& h);

enum class PointKind { user, high, mid, low };

std::string_view to_string(PointKind k);

/// Top decile (ceil(n/10) items) is high, bottom decile low, the rest mid.
/// Ties keep item order; excluded items are mid.
std::vector<PointKind> decile_tags(std::span<const std::optional<double>> utilities);

struct ProjectionPoint {
  double x = 0.0;
  double y = 0.0;
  PointKind kind = PointKind::mid;
  std::string id;
};

/// The user's point followed by every item point with its utility tag. k must be 2.
std::vector<ProjectionPoint> project_latent(const FactorModel& model, std::size_t user,
                                            std::span<const std::optional<double>> utilities,
                                            std::span<const std::string> item_ids, const std::string& user_id);

/// Mean |p_i - q_j| over users i and the items tagged `kind` for that user.
double mean_decile_distance(const FactorModel& model, const UtilityParams& params,
                            std::span<const ItemStats> items, PointKind kind);

/// Standalone SVG scatter of a projection.
std::string render_projection_svg(std::span<const ProjectionPoint> points, const std::string& title);

} // namespace ratingcbc
