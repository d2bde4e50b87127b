#include "ratingcbc/exp_mf.hpp"

#include "ratingcbc/error.hpp"
#include "ratingcbc/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace ratingcbc {

RatingMatrix::RatingMatrix(std::size_t n_users, std::size_t n_items, std::vector<RatingEntry> entries)
    : n_users_(n_users), n_items_(n_items), entries_(std::move(entries)) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : entries_) {
    if (e.user >= n_users_ || e.item >= n_items_)
      throw ValidationError(fmt::format("rating index ({}, {}) out of range {}x{}", e.user, e.item, n_users_, n_items_));
    if (!(e.rating >= 1.0 && e.rating <= 5.0))
      throw ValidationError(fmt::format("rating {} outside 1..5", e.rating));
    if (!seen.emplace(e.user, e.item).second)
      throw ValidationError(fmt::format("duplicate rating for user {} item {}", e.user, e.item));
  }
  user_ids_.resize(n_users_);
  item_ids_.resize(n_items_);
  for (std::size_t i = 0; i < n_users_; ++i) user_ids_[i] = fmt::format("u{}", i);
  for (std::size_t j = 0; j < n_items_; ++j) item_ids_[j] = fmt::format("i{}", j);
}

RatingMatrix RatingMatrix::from_records(std::span<const RatingRecord> records) {
  if (records.empty()) throw ValidationError("no ratings");
  std::map<std::string, std::size_t> users, items;
  for (const auto& r : records) {
    users.emplace(r.user_id, 0);
    items.emplace(r.item_id, 0);
  }
  std::size_t n = 0;
  for (auto& [id, idx] : users) idx = n++;
  n = 0;
  for (auto& [id, idx] : items) idx = n++;

  std::vector<RatingEntry> entries;
  entries.reserve(records.size());
  for (const auto& r : records) {
    const auto u = users.at(r.user_id);
    const auto i = items.at(r.item_id);
    entries.push_back({u, i, static_cast<double>(r.rating)});
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& r : records)
    if (!seen.emplace(users.at(r.user_id), items.at(r.item_id)).second)
      throw ValidationError(fmt::format("duplicate rating for user '{}' item '{}'", r.user_id, r.item_id));

  RatingMatrix m(users.size(), items.size(), std::move(entries));
  for (const auto& [id, idx] : users) m.user_ids_[idx] = id;
  for (const auto& [id, idx] : items) m.item_ids_[idx] = id;
  return m;
}

std::optional<std::size_t> RatingMatrix::user_index(const std::string& id) const {
  auto it = std::find(user_ids_.begin(), user_ids_.end(), id);
  if (it == user_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - user_ids_.begin());
}

const AttributeTriple& UtilityParams::gamma_for(std::size_t user) const {
  if (gamma.empty()) throw ValidationError("utility weights are empty");
  if (gamma.size() == 1) return gamma.front();
  if (user >= gamma.size()) throw ValidationError(fmt::format("no utility weights for user {}", user));
  return gamma[user];
}

namespace {

AttributeTriple attributes_of(const ItemStats& s) {
  return {static_cast<double>(s.count), s.mean, s.variance.value_or(0.0)};
}

} // namespace

Normalization zscore_normalization(std::span<const ItemStats> items) {
  std::vector<AttributeTriple> rows;
  for (const auto& s : items)
    if (s.variance) rows.push_back(attributes_of(s));
  if (rows.empty()) throw ValidationError("no items with a defined variance");
  Normalization norm;
  const double n = static_cast<double>(rows.size());
  for (std::size_t a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[a];
    mean /= n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[a] - mean) * (r[a] - mean);
    const double sd = std::sqrt(ss / n);
    norm.shift[a] = mean;
    norm.scale[a] = sd > 0.0 ? sd : 1.0;
  }
  return norm;
}

AttributeTriple gamma_from_part_worths(const AttributeTriple& betas, const AttributeTriple& level_gaps,
                                       const Normalization& normalization) {
  AttributeTriple g{};
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(level_gaps[a] != 0.0)) throw ValidationError("level gap must be nonzero");
    g[a] = betas[a] / level_gaps[a] * normalization.scale[a];
  }
  return g;
}

AttributeTriple reference_level_gaps() { return {50.0, 0.6, 0.6}; }

std::optional<double> raw_item_utility(const UtilityParams& params, const ItemStats& stats, std::size_t user) {
  if (!stats.variance) return std::nullopt;
  const auto& g = params.gamma_for(user);
  const auto x = attributes_of(stats);
  double u = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(params.normalization.scale[a] > 0.0)) throw ValidationError("normalization scale must be positive");
    u += g[a] * (x[a] - params.normalization.shift[a]) / params.normalization.scale[a];
  }
  return u;
}

std::vector<std::optional<double>> item_utilities(const UtilityParams& params, std::span<const ItemStats> items,
                                                  std::size_t user) {
  std::vector<std::optional<double>> out;
  out.reserve(items.size());
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : items) {
    out.push_back(raw_item_utility(params, s, user));
    if (out.back()) {
      lo = std::min(lo, *out.back());
      hi = std::max(hi, *out.back());
    }
  }
  const double range = hi - lo;
  for (auto& u : out) {
    if (!u) continue;
    *u = range > 0.0 ? std::clamp((*u - lo) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

Matrix utility_table(const UtilityParams& params, std::span<const ItemStats> items, std::size_t n_users) {
  Matrix t(n_users, items.size());
  for (std::size_t i = 0; i < n_users; ++i) {
    const auto u = item_utilities(params, items, i);
    for (std::size_t j = 0; j < items.size(); ++j) t(i, j) = u[j].value_or(0.0);
  }
  return t;
}

std::vector<ItemStats> stats_in_item_order(const RatingMatrix& data, const std::map<std::string, ItemStats>& stats) {
  std::vector<ItemStats> out;
  out.reserve(data.n_items());
  for (const auto& id : data.item_ids()) {
    auto it = stats.find(id);
    if (it == stats.end()) throw ValidationError(fmt::format("no statistics for item '{}'", id));
    out.push_back(it->second);
  }
  return out;
}

void validate(const Hyperparams& h) {
  if (!(h.phi >= 0.0)) throw ValidationError("phi must be >= 0");
  if (!(h.delta >= 0.0)) throw ValidationError("delta must be >= 0");
  if (!(h.learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (h.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (h.k < 1) throw ValidationError("k must be >= 1");
  if (!(h.init_scale >= 0.0)) throw ValidationError("init_scale must be >= 0");
}

namespace {

void check_indices(const FactorModel& m, std::size_t user, std::size_t item) {
  if (user >= m.P.rows() || item >= m.Q.rows())
    throw ValidationError(fmt::format("prediction index ({}, {}) out of range", user, item));
}

void check_shapes(const FactorModel& m, const RatingMatrix& data, const Matrix* utility) {
  if (m.P.rows() != data.n_users() || m.Q.rows() != data.n_items() || m.P.cols() != m.k || m.Q.cols() != m.k)
    throw ValidationError("factor model shape does not match the rating matrix");
  if (utility && (utility->rows() != data.n_users() || utility->cols() != data.n_items()))
    throw ValidationError("utility table shape does not match the rating matrix");
}

} // namespace

double predict(const FactorModel& model, std::size_t user, std::size_t item) {
  check_indices(model, user, item);
  return dot(model.P.row(user), model.Q.row(item));
}

double predict_clamped(const FactorModel& model, std::size_t user, std::size_t item) {
  return std::clamp(predict(model, user, item), 1.0, 5.0);
}

double loss(const FactorModel& model, const RatingMatrix& data, const Matrix& utility, const Hyperparams& h) {
  check_shapes(model, data, &utility);
  double total = 0.0;
  for (const auto& e : data.entries()) {
    const auto p = model.P.row(e.user);
    const auto q = model.Q.row(e.item);
    const double err = e.rating - dot(p, q);
    double pp = 0.0, qq = 0.0, dd = 0.0;
    for (std::size_t f = 0; f < model.k; ++f) {
      pp += p[f] * p[f];
      qq += q[f] * q[f];
      dd += (p[f] - q[f]) * (p[f] - q[f]);
    }
    total += err * err + h.phi / 2.0 * (pp + qq);
    if (h.delta != 0.0) total += h.delta / 2.0 * dd * utility(e.user, e.item);
  }
  return total;
}

double baseline_mf_loss(const FactorModel& model, const RatingMatrix& data, double phi) {
  check_shapes(model, data, nullptr);
  double total = 0.0;
  for (const auto& e : data.entries()) {
    const auto p = model.P.row(e.user);
    const auto q = model.Q.row(e.item);
    const double err = e.rating - dot(p, q);
    double pp = 0.0, qq = 0.0;
    for (std::size_t f = 0; f < model.k; ++f) {
      pp += p[f] * p[f];
      qq += q[f] * q[f];
    }
    total += err * err + phi / 2.0 * (pp + qq);
  }
  return total;
}

LossGradient loss_gradient(const FactorModel& model, const RatingMatrix& data, const Matrix& utility,
                           const Hyperparams& h) {
  check_shapes(model, data, &utility);
  LossGradient g{Matrix(model.P.rows(), model.k), Matrix(model.Q.rows(), model.k)};
  for (const auto& e : data.entries()) {
    const auto p = model.P.row(e.user);
    const auto q = model.Q.row(e.item);
    const double err = e.rating - dot(p, q);
    const double du = h.delta * utility(e.user, e.item);
    for (std::size_t f = 0; f < model.k; ++f) {
      const double pull = du * (p[f] - q[f]);
      g.P(e.user, f) += -2.0 * err * q[f] + h.phi * p[f] + pull;
      g.Q(e.item, f) += -2.0 * err * p[f] + h.phi * q[f] - pull;
    }
  }
  return g;
}

TrainResult train_sgd(const RatingMatrix& data, const Matrix& utility, const Hyperparams& h) {
  validate(h);
  if (data.entries().empty()) throw ValidationError("no ratings to train on");
  if (utility.rows() != data.n_users() || utility.cols() != data.n_items())
    throw ValidationError("utility table shape does not match the rating matrix");

  Rng rng(h.seed);
  TrainResult result;
  auto& m = result.model;
  m.k = h.k;
  m.P = Matrix(data.n_users(), h.k);
  m.Q = Matrix(data.n_items(), h.k);
  for (std::size_t i = 0; i < m.P.rows(); ++i)
    for (std::size_t f = 0; f < h.k; ++f) m.P(i, f) = rng.uniform(-h.init_scale, h.init_scale);
  for (std::size_t j = 0; j < m.Q.rows(); ++j)
    for (std::size_t f = 0; f < h.k; ++f) m.Q(j, f) = rng.uniform(-h.init_scale, h.init_scale);

  std::vector<std::size_t> order(data.entries().size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> p_old(h.k);
  const double lr = h.learning_rate;

  for (std::size_t epoch = 0; epoch < h.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (auto idx : order) {
      const auto& e = data.entries()[idx];
      auto p = m.P.row(e.user);
      auto q = m.Q.row(e.item);
      const double err = e.rating - dot(p, q);
      const double du = h.delta * utility(e.user, e.item);
      std::copy(p.begin(), p.end(), p_old.begin());
      for (std::size_t f = 0; f < h.k; ++f) {
        const double pull = du * (p_old[f] - q[f]);
        p[f] -= lr * (-2.0 * err * q[f] + h.phi * p_old[f] + pull);
        q[f] -= lr * (-2.0 * err * p_old[f] + h.phi * q[f] - pull);
      }
    }
    const double l = loss(m, data, utility, h);
    if (!std::isfinite(l))
      throw NumericalError(
          fmt::format("training diverged at epoch {}; lower learning_rate (currently {})", epoch + 1, lr));
    result.loss_trace.push_back(l);
  }
  return result;
}

std::string_view to_string(PointKind k) {
  switch (k) {
  case PointKind::user: return "user";
  case PointKind::high: return "high";
  case PointKind::mid: return "mid";
  case PointKind::low: return "low";
  }
  return "mid";
}

std::vector<PointKind> decile_tags(std::span<const std::optional<double>> utilities) {
  std::vector<PointKind> tags(utilities.size(), PointKind::mid);
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < utilities.size(); ++j)
    if (utilities[j]) idx.push_back(j);
  const std::size_t n = idx.size();
  if (n == 0) return tags;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return *utilities[a] > *utilities[b]; });
  const std::size_t high = (n + 9) / 10;
  const std::size_t low = std::min(high, n - high);
  for (std::size_t r = 0; r < high; ++r) tags[idx[r]] = PointKind::high;
  for (std::size_t r = n - low; r < n; ++r) tags[idx[r]] = PointKind::low;
  return tags;
}

std::vector<ProjectionPoint> project_latent(const FactorModel& model, std::size_t user,
                                            std::span<const std::optional<double>> utilities,
                                            std::span<const std::string> item_ids, const std::string& user_id) {
  if (model.k != 2) throw ValidationError(fmt::format("latent projection needs k = 2, model has k = {}", model.k));
  if (user >= model.P.rows()) throw ValidationError(fmt::format("user index {} out of range", user));
  if (utilities.size() != model.Q.rows() || item_ids.size() != model.Q.rows())
    throw ValidationError("utilities and item ids must cover every item");
  std::vector<ProjectionPoint> pts;
  pts.push_back({model.P(user, 0), model.P(user, 1), PointKind::user, user_id});
  const auto tags = decile_tags(utilities);
  for (std::size_t j = 0; j < model.Q.rows(); ++j) pts.push_back({model.Q(j, 0), model.Q(j, 1), tags[j], item_ids[j]});
  return pts;
}

double mean_decile_distance(const FactorModel& model, const UtilityParams& params, std::span<const ItemStats> items,
                            PointKind kind) {
  if (items.size() != model.Q.rows()) throw ValidationError("item stats must cover every item");
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < model.P.rows(); ++i) {
    const auto tags = decile_tags(item_utilities(params, items, i));
    const auto p = model.P.row(i);
    for (std::size_t j = 0; j < tags.size(); ++j) {
      if (tags[j] != kind) continue;
      const auto q = model.Q.row(j);
      double d = 0.0;
      for (std::size_t f = 0; f < model.k; ++f) d += (p[f] - q[f]) * (p[f] - q[f]);
      total += std::sqrt(d);
      ++n;
    }
  }
  if (n == 0) throw ValidationError(fmt::format("no items tagged {}", to_string(kind)));
  return total / static_cast<double>(n);
}

std::string render_projection_svg(std::span<const ProjectionPoint> points, const std::string& title) {
  constexpr double size = 480.0, margin = 40.0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& p : points) {
    if (first) {
      xmin = xmax = p.x;
      ymin = ymax = p.y;
      first = false;
    }
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double cx = (xmin + xmax) / 2.0, cy = (ymin + ymax) / 2.0;
  const double inner = size - 2.0 * margin;
  auto sx = [&](double x) { return size / 2.0 + (x - cx) / span * inner; };
  auto sy = [&](double y) { return size / 2.0 - (y - cy) / span * inner; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{2}</text>\n"
      "<line x1=\"{1}\" y1=\"{3:.2f}\" x2=\"{4}\" y2=\"{3:.2f}\" stroke=\"#ccc\"/>\n"
      "<line x1=\"{5:.2f}\" y1=\"{1}\" x2=\"{5:.2f}\" y2=\"{4}\" stroke=\"#ccc\"/>\n",
      size, margin, title, sy(0.0), size - margin, sx(0.0));
  // mid first so tagged items stay visible, user last
  for (auto kind : {PointKind::mid, PointKind::low, PointKind::high, PointKind::user}) {
    for (const auto& p : points) {
      if (p.kind != kind) continue;
      const double x = sx(p.x), y = sy(p.y);
      switch (kind) {
      case PointKind::user:
        out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" height=\"12\" fill=\"#1f4fd1\"><title>{}</title></rect>\n",
                           x - 6.0, y - 6.0, p.id);
        break;
      case PointKind::high:
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"#2ca02c\"><title>{}</title></circle>\n", x, y, p.id);
        break;
      case PointKind::low:
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"#d62728\"><title>{}</title></circle>\n", x, y, p.id);
        break;
      case PointKind::mid:
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#bbbbbb\"><title>{}</title></circle>\n", x, y, p.id);
        break;
      }
    }
  }
  out += "</svg>\n";
  return out;
}

} // namespace ratingcbc
