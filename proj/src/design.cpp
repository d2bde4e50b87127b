#include "ratingcbc/design.hpp"

#include "ratingcbc/error.hpp"
#include "ratingcbc/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace ratingcbc {

std::string_view to_string(AttributeRole role) {
  switch (role) {
  case AttributeRole::categorical: return "categorical";
  case AttributeRole::count: return "count";
  case AttributeRole::mean: return "mean";
  case AttributeRole::variance: return "variance";
  case AttributeRole::skewness: return "skewness";
  case AttributeRole::numeric: return "numeric";
  }
  return "categorical";
}

AttributeRole parse_attribute_role(std::string_view text) {
  for (auto role : {AttributeRole::categorical, AttributeRole::count, AttributeRole::mean,
                    AttributeRole::variance, AttributeRole::skewness, AttributeRole::numeric}) {
    if (to_string(role) == text) return role;
  }
  throw ValidationError(fmt::format("unknown attribute role '{}'", text));
}

std::string Attribute::level_label(std::size_t level) const {
  const LevelValue& v = levels.at(level);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return fmt::format("{}", std::get<double>(v));
}

void validate(const Attribute& attribute) {
  if (attribute.levels.size() < 2)
    throw ValidationError(fmt::format("attribute '{}' needs at least two levels", attribute.name));
  for (std::size_t i = 0; i < attribute.levels.size(); ++i) {
    const LevelValue& v = attribute.levels[i];
    if (const auto* d = std::get_if<double>(&v)) {
      if (!std::isfinite(*d))
        throw ValidationError(fmt::format("attribute '{}' has a non-finite level", attribute.name));
      if (attribute.role == AttributeRole::mean && (*d < 1.0 || *d > 5.0))
        throw ValidationError(
            fmt::format("mean level {} of '{}' is outside [1,5]", *d, attribute.name));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (attribute.levels[j] == v)
        throw ValidationError(fmt::format("attribute '{}' repeats level '{}'", attribute.name,
                                          attribute.level_label(i)));
    }
  }
}

const Profile& Design::profile(int id) const {
  for (const auto& p : profiles)
    if (p.id == id) return p;
  throw ValidationError(fmt::format("design references unknown profile {}", id));
}

std::size_t Design::alternatives() const {
  return choice_sets.empty() ? 0 : choice_sets.front().profile_ids.size();
}

std::size_t Design::observations() const { return choice_sets.size() * alternatives(); }

void validate(const Design& design) {
  if (design.attributes.empty()) throw ValidationError("design has no attributes");
  for (const auto& a : design.attributes) validate(a);
  std::set<int> ids;
  for (const auto& p : design.profiles) {
    if (!ids.insert(p.id).second)
      throw ValidationError(fmt::format("duplicate profile id {}", p.id));
    if (p.levels.size() != design.attributes.size())
      throw ValidationError(fmt::format("profile {} has {} levels for {} attributes", p.id,
                                        p.levels.size(), design.attributes.size()));
    for (std::size_t a = 0; a < p.levels.size(); ++a) {
      if (p.levels[a] >= design.attributes[a].level_count())
        throw ValidationError(fmt::format("profile {} has out-of-range level for '{}'", p.id,
                                          design.attributes[a].name));
    }
  }
  const std::size_t m = design.alternatives();
  for (std::size_t s = 0; s < design.choice_sets.size(); ++s) {
    const auto& set = design.choice_sets[s];
    if (set.profile_ids.size() < 2)
      throw ValidationError(fmt::format("choice set {} has fewer than two alternatives", s));
    if (set.profile_ids.size() != m)
      throw ValidationError("choice sets differ in their number of alternatives");
    std::set<int> seen;
    for (int id : set.profile_ids) {
      if (!ids.contains(id))
        throw ValidationError(fmt::format("choice set {} references unknown profile {}", s, id));
      if (!seen.insert(id).second)
        throw ValidationError(fmt::format("choice set {} repeats profile {}", s, id));
    }
  }
}

std::vector<Profile> enumerate_full_factorial(std::span<const Attribute> attributes) {
  if (attributes.empty()) throw ValidationError("full factorial needs at least one attribute");
  for (const auto& a : attributes) validate(a);

  std::vector<Profile> out;
  std::vector<std::size_t> idx(attributes.size(), 0);
  int id = 1;
  while (true) {
    out.push_back(Profile{id++, idx, std::nullopt});
    // Odometer increment, last attribute fastest.
    std::size_t a = attributes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < attributes[a].level_count()) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
  }
}

Matrix orthogonal_contrasts(std::size_t levels) {
  // Helmert columns rescaled to sum of squares == levels.
  Matrix c(levels, levels - 1);
  for (std::size_t j = 0; j + 1 < levels; ++j) {
    const double k = static_cast<double>(j + 1);
    const double scale = std::sqrt(static_cast<double>(levels) / (k * (k + 1.0)));
    for (std::size_t i = 0; i <= j; ++i) c(i, j) = scale;
    c(j + 1, j) = -k * scale;
  }
  return c;
}

namespace {

std::unordered_map<int, const Profile*> profile_index(const Design& design) {
  std::unordered_map<int, const Profile*> index;
  for (const auto& p : design.profiles) index.emplace(p.id, &p);
  return index;
}

std::size_t parameter_count(std::span<const Attribute> attributes) {
  std::size_t p = 0;
  for (const auto& a : attributes) p += a.level_count() - 1;
  return p;
}

} // namespace

DesignMatrix encode(const Design& design, Coding coding) {
  if (design.choice_sets.empty()) throw ValidationError("cannot encode an empty design");
  validate(design);

  DesignMatrix out;
  out.coding = coding;
  out.parameters = parameter_count(design.attributes);

  std::vector<Matrix> contrasts;
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    const std::size_t levels = design.attributes[a].level_count();
    if (coding == Coding::indicator) {
      for (std::size_t l = 0; l < levels; ++l) out.columns.push_back({a, l});
    } else {
      contrasts.push_back(orthogonal_contrasts(levels));
      for (std::size_t l = 0; l + 1 < levels; ++l) out.columns.push_back({a, l});
    }
  }

  const auto index = profile_index(design);
  out.rows = Matrix(design.observations(), out.columns.size());
  std::size_t r = 0;
  for (const auto& set : design.choice_sets) {
    for (int id : set.profile_ids) {
      const Profile& p = *index.at(id);
      std::size_t c = 0;
      for (std::size_t a = 0; a < design.attributes.size(); ++a) {
        const std::size_t levels = design.attributes[a].level_count();
        if (coding == Coding::indicator) {
          out.rows(r, c + p.levels[a]) = 1.0;
          c += levels;
        } else {
          for (std::size_t l = 0; l + 1 < levels; ++l) out.rows(r, c++) = contrasts[a](p.levels[a], l);
        }
      }
      ++r;
    }
  }
  return out;
}

namespace {

std::optional<double> efficiency_or_empty(const DesignMatrix& matrix) {
  const std::size_t n = matrix.rows.rows();
  const std::size_t p = matrix.rows.cols();
  if (p == 0 || n < p) return std::nullopt;
  const auto lu = lu_determinant(cross_product(matrix.rows));
  if (lu.singular_column || lu.determinant <= 0.0) return std::nullopt;
  // |(X'X)^-1|^(1/p) = det(X'X)^(-1/p)
  return 100.0 * std::pow(lu.determinant, 1.0 / static_cast<double>(p)) / static_cast<double>(n);
}

} // namespace

double d_efficiency(const DesignMatrix& matrix) {
  if (matrix.coding != Coding::contrast)
    throw ValidationError("d-efficiency requires contrast coding");
  const std::size_t n = matrix.rows.rows();
  const std::size_t p = matrix.rows.cols();
  if (n < p)
    throw ValidationError(fmt::format("d-efficiency needs N >= p (N={}, p={})", n, p));
  const auto lu = lu_determinant(cross_product(matrix.rows));
  if (lu.singular_column || lu.determinant <= 0.0) {
    const std::size_t col = lu.singular_column.value_or(0);
    throw NumericalError(fmt::format(
        "d-efficiency undefined: X'X is singular (no information on contrast column {})", col));
  }
  return *efficiency_or_empty(matrix);
}

namespace {

std::size_t balance_deviation(const Design& design,
                              const std::unordered_map<int, const Profile*>& index) {
  std::size_t worst = 0;
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    std::vector<std::size_t> counts(design.attributes[a].level_count(), 0);
    for (const auto& set : design.choice_sets)
      for (int id : set.profile_ids) ++counts[index.at(id)->levels[a]];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    worst = std::max(worst, *hi - *lo);
  }
  return worst;
}

std::size_t overlap_count(const Design& design,
                          const std::unordered_map<int, const Profile*>& index) {
  std::size_t total = 0;
  for (const auto& set : design.choice_sets) {
    for (std::size_t a = 0; a < design.attributes.size(); ++a) {
      std::set<std::size_t> seen;
      bool shared = false;
      for (int id : set.profile_ids) shared |= !seen.insert(index.at(id)->levels[a]).second;
      if (shared) ++total;
    }
  }
  return total;
}

double max_cross_correlation(const DesignMatrix& x) {
  const std::size_t n = x.rows.rows();
  const std::size_t cols = x.rows.cols();
  std::vector<double> mean(cols, 0.0), sd(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < n; ++r) mean[c] += x.rows(r, c);
    mean[c] /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) sd[c] += (x.rows(r, c) - mean[c]) * (x.rows(r, c) - mean[c]);
    sd[c] = std::sqrt(sd[c]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = i + 1; j < cols; ++j) {
      if (x.columns[i].attribute == x.columns[j].attribute) continue;
      if (sd[i] == 0.0 || sd[j] == 0.0) continue;
      double cov = 0.0;
      for (std::size_t r = 0; r < n; ++r) cov += (x.rows(r, i) - mean[i]) * (x.rows(r, j) - mean[j]);
      worst = std::max(worst, std::abs(cov / (sd[i] * sd[j])));
    }
  }
  return worst;
}

} // namespace

DesignDiagnostics diagnostics(const Design& design) {
  const DesignMatrix x = encode(design, Coding::contrast);
  const auto index = profile_index(design);
  DesignDiagnostics d;
  d.d_efficiency = efficiency_or_empty(x).value_or(0.0);
  d.level_balance_deviation = balance_deviation(design, index);
  d.orthogonality_max_corr = max_cross_correlation(x);
  d.overlap_total = overlap_count(design, index);
  return d;
}

namespace {

void canonicalize(std::vector<ChoiceSet>& sets) {
  for (auto& s : sets) std::sort(s.profile_ids.begin(), s.profile_ids.end());
  std::sort(sets.begin(), sets.end(), [](const ChoiceSet& a, const ChoiceSet& b) {
    return a.profile_ids < b.profile_ids;
  });
}

/// Complementary pairing when the profiles form a complete two-level factorial.
std::optional<std::vector<ChoiceSet>> foldover_pairing(std::span<const Attribute> attributes,
                                                       std::span<const Profile> profiles,
                                                       const ChoiceSetOptions& options) {
  if (options.m != 2) return std::nullopt;
  for (const auto& a : attributes)
    if (a.level_count() != 2) return std::nullopt;
  if (attributes.size() >= 63) return std::nullopt;
  const std::size_t full = std::size_t{1} << attributes.size();
  if (profiles.size() != full || options.n_sets * 2 != full) return std::nullopt;

  std::map<std::vector<std::size_t>, int> by_levels;
  for (const auto& p : profiles) by_levels.emplace(p.levels, p.id);
  if (by_levels.size() != full) return std::nullopt;

  std::vector<int> ids;
  for (const auto& p : profiles) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());

  std::set<int> used;
  std::vector<ChoiceSet> sets;
  for (const auto& [levels, id] : by_levels) {
    if (used.contains(id)) continue;
    std::vector<std::size_t> flipped = levels;
    for (auto& l : flipped) l = 1 - l;
    const int partner = by_levels.at(flipped);
    used.insert(id);
    used.insert(partner);
    sets.push_back(ChoiceSet{{id, partner}});
  }
  return sets;
}

struct SearchScore {
  double efficiency = 0.0;
  std::size_t overlap = 0;
  std::size_t imbalance = 0;
};

bool better(const SearchScore& a, const SearchScore& b) {
  constexpr double eps = 1e-9;
  if (a.efficiency > b.efficiency + eps) return true;
  if (a.efficiency < b.efficiency - eps) return false;
  if (a.overlap != b.overlap) return a.overlap < b.overlap;
  return a.imbalance < b.imbalance;
}

class SwapSearch {
public:
  SwapSearch(std::span<const Attribute> attributes, std::span<const Profile> profiles,
             const ChoiceSetOptions& options)
      : m_(options.m), slots_(options.n_sets * options.m) {
    design_.attributes.assign(attributes.begin(), attributes.end());
    design_.profiles.assign(profiles.begin(), profiles.end());
    design_.seed = options.seed;
    for (const auto& p : design_.profiles) index_.emplace(p.id, &p);
    for (const auto& p : design_.profiles) arrangement_.push_back(p.id);
    std::sort(arrangement_.begin(), arrangement_.end());
    Rng rng(options.seed);
    rng.shuffle(std::span<int>(arrangement_));
    design_.choice_sets.assign(options.n_sets, ChoiceSet{std::vector<int>(m_)});
  }

  std::vector<ChoiceSet> run(std::size_t max_iters) {
    SearchScore current = score();
    const std::size_t total = arrangement_.size();
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
      SearchScore best = current;
      std::optional<std::pair<std::size_t, std::size_t>> best_move;
      for (std::size_t a = 0; a < slots_; ++a) {
        for (std::size_t b = a + 1; b < total; ++b) {
          if (b < slots_ && a / m_ == b / m_) continue;
          std::swap(arrangement_[a], arrangement_[b]);
          const SearchScore s = score();
          std::swap(arrangement_[a], arrangement_[b]);
          if (better(s, best)) {
            best = s;
            best_move = {a, b};
          }
        }
      }
      if (!best_move) break;
      std::swap(arrangement_[best_move->first], arrangement_[best_move->second]);
      current = best;
    }
    sync();
    return design_.choice_sets;
  }

private:
  void sync() {
    for (std::size_t s = 0; s < design_.choice_sets.size(); ++s)
      for (std::size_t j = 0; j < m_; ++j)
        design_.choice_sets[s].profile_ids[j] = arrangement_[s * m_ + j];
  }

  SearchScore score() {
    sync();
    SearchScore s;
    s.efficiency = efficiency_or_empty(encode(design_, Coding::contrast)).value_or(0.0);
    s.overlap = overlap_count(design_, index_);
    s.imbalance = balance_deviation(design_, index_);
    return s;
  }

  std::size_t m_;
  std::size_t slots_;
  Design design_;
  std::unordered_map<int, const Profile*> index_;
  std::vector<int> arrangement_;
};

} // namespace

Design build_choice_sets(std::span<const Attribute> attributes, std::span<const Profile> profiles,
                         const ChoiceSetOptions& options) {
  if (options.m < 2) throw ValidationError("choice sets need at least two alternatives");
  if (options.n_sets == 0) throw ValidationError("at least one choice set is required");
  if (options.n_sets * options.m > profiles.size())
    throw ValidationError(fmt::format(
        "infeasible design: {} sets x {} alternatives needs {} profiles, only {} available",
        options.n_sets, options.m, options.n_sets * options.m, profiles.size()));

  Design design;
  design.attributes.assign(attributes.begin(), attributes.end());
  design.profiles.assign(profiles.begin(), profiles.end());
  design.seed = options.seed;
  for (const auto& a : design.attributes) validate(a);

  if (auto sets = foldover_pairing(attributes, profiles, options)) {
    design.choice_sets = std::move(*sets);
  } else {
    design.choice_sets = SwapSearch(attributes, profiles, options).run(options.max_iters);
  }
  canonicalize(design.choice_sets);
  validate(design);
  return design;
}

} // namespace ratingcbc
