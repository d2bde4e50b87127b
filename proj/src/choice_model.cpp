#include "ratingcbc/choice_model.hpp"

#include "ratingcbc/csv.hpp"
#include "ratingcbc/error.hpp"
#include "ratingcbc/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

namespace ratingcbc {

std::string_view to_string(Group g) { return g == Group::High ? "High" : "Low"; }

Group parse_group(std::string_view text) {
  if (text == "High" || text == "high") return Group::High;
  if (text == "Low" || text == "low") return Group::Low;
  throw ValidationError(fmt::format("group must be High or Low, got '{}'", text));
}

DummyCoding::DummyCoding(std::span<const Attribute> attributes, std::vector<std::size_t> reference_levels)
    : reference_(std::move(reference_levels)) {
  if (reference_.size() != attributes.size())
    throw ValidationError(fmt::format("{} reference levels for {} attributes", reference_.size(),
                                      attributes.size()));
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    const std::size_t levels = attributes[a].level_count();
    if (reference_[a] >= levels)
      throw ValidationError(fmt::format("reference level {} out of range for '{}'", reference_[a],
                                        attributes[a].name));
    level_counts_.push_back(levels);
    for (std::size_t l = 0; l < levels; ++l)
      if (l != reference_[a]) labels_.push_back({a, l});
  }
}

std::vector<double> DummyCoding::row(const Profile& profile) const {
  if (profile.levels.size() != level_counts_.size())
    throw ValidationError(fmt::format("profile {} does not match the coding's attributes", profile.id));
  std::vector<double> out(labels_.size(), 0.0);
  for (std::size_t c = 0; c < labels_.size(); ++c)
    if (profile.levels[labels_[c].attribute] == labels_[c].level) out[c] = 1.0;
  return out;
}

Matrix DummyCoding::choice_set_rows(const Design& design, const ChoiceSet& set) const {
  Matrix x(set.profile_ids.size(), labels_.size());
  for (std::size_t j = 0; j < set.profile_ids.size(); ++j) {
    const auto r = row(design.profile(set.profile_ids[j]));
    std::copy(r.begin(), r.end(), x.row(j).begin());
  }
  return x;
}

std::vector<std::size_t> rating_summary_reference_levels() { return {1, 0, 0, 0, 1}; }

PartWorths make_part_worths(const DummyCoding& coding, std::vector<double> values) {
  if (values.size() != coding.size())
    throw ValidationError(fmt::format("expected {} part-worths, got {}", coding.size(), values.size()));
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("part-worths must be finite");
  return PartWorths{coding.reference_levels(), coding.labels(), std::move(values)};
}

double deterministic_utility(std::span<const double> profile_row, const PartWorths& beta) {
  if (profile_row.size() != beta.size())
    throw ValidationError(fmt::format("coded row has {} columns, beta has {}", profile_row.size(),
                                      beta.size()));
  return dot(profile_row, beta.beta);
}

namespace {

std::vector<double> softmax(std::vector<double> u) {
  const double mx = *std::max_element(u.begin(), u.end());
  double total = 0.0;
  for (double& v : u) total += (v = std::exp(v - mx));
  for (double& v : u) v /= total;
  return u;
}

} // namespace

std::vector<double> choice_probabilities(const Matrix& rows, const PartWorths& beta) {
  if (rows.rows() == 0) throw ValidationError("choice set has no alternatives");
  std::vector<double> u(rows.rows());
  for (std::size_t j = 0; j < rows.rows(); ++j) u[j] = deterministic_utility(rows.row(j), beta);
  return softmax(std::move(u));
}

std::vector<std::string> default_respondent_ids(std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("R{:03}", i + 1));
  return ids;
}

std::vector<ChoiceObservation> simulate_choices(const Design& design, const PartWorths& beta,
                                                const SimConfig& config) {
  if (config.n_respondents == 0) throw ValidationError("simulation needs at least one respondent");
  const auto ids = default_respondent_ids(config.n_respondents);
  return simulate_choices(design, beta, ids, config.seed, config.randomize_order);
}

std::vector<ChoiceObservation> simulate_choices(const Design& design, const PartWorths& beta,
                                                std::span<const std::string> respondent_ids,
                                                std::uint64_t seed, bool randomize_order) {
  validate(design);
  const DummyCoding coding(design.attributes, beta.reference_levels);
  if (coding.labels() != beta.labels) throw ValidationError("part-worths do not match the design");

  std::vector<std::vector<double>> probs;
  for (const auto& set : design.choice_sets)
    probs.push_back(choice_probabilities(coding.choice_set_rows(design, set), beta));

  const std::size_t n_sets = design.choice_sets.size();
  const std::size_t m = design.alternatives();
  std::vector<ChoiceObservation> out;
  out.reserve(respondent_ids.size() * n_sets);
  for (std::size_t r = 0; r < respondent_ids.size(); ++r) {
    Rng rng({seed, static_cast<std::uint64_t>(r)});
    std::vector<std::size_t> task_order(n_sets);
    std::iota(task_order.begin(), task_order.end(), 0);
    if (randomize_order) rng.shuffle(std::span<std::size_t>(task_order));
    for (std::size_t s : task_order) {
      std::vector<std::size_t> shown(m);
      std::iota(shown.begin(), shown.end(), 0);
      if (randomize_order) rng.shuffle(std::span<std::size_t>(shown));
      const double draw = rng.uniform();
      double acc = 0.0;
      std::size_t chosen = shown.back();
      for (std::size_t alt : shown) {
        acc += probs[s][alt];
        if (draw < acc) {
          chosen = alt;
          break;
        }
      }
      out.push_back({respondent_ids[r], s, chosen});
    }
  }
  return out;
}

std::vector<ChoiceObservation> read_observations_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header({"respondent_id", "choice_set_index", "chosen_alternative"});
  std::vector<ChoiceObservation> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 3) reader.fail(fmt::format("expected 3 fields, got {}", f.size()));
    const long long s = parse_integer(f[1], reader);
    const long long c = parse_integer(f[2], reader);
    if (s < 0 || c < 0) reader.fail("negative index");
    out.push_back({f[0], static_cast<std::size_t>(s), static_cast<std::size_t>(c)});
  }
  if (out.empty()) throw ValidationError(fmt::format("{}: no observations", source));
  return out;
}

std::vector<ChoiceObservation> read_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open observations file '{}'", path.string()));
  return read_observations_csv(in, path.string());
}

void write_observations_csv(std::ostream& out, std::span<const ChoiceObservation> observations) {
  out << "respondent_id,choice_set_index,chosen_alternative\n";
  for (const auto& o : observations)
    out << o.respondent_id << ',' << o.choice_set_index << ',' << o.chosen_alternative << '\n';
}

namespace {

std::string label_text(const Design& design, const ParameterLabel& label) {
  const auto& a = design.attributes[label.attribute];
  return fmt::format("{}={}", a.name, a.level_label(label.level));
}

/// Choice counts per (set, alternative) with the coded rows of each set.
class ChoiceLikelihood {
public:
  ChoiceLikelihood(const Design& design, std::span<const ChoiceObservation> observations,
                   const DummyCoding& coding)
      : p_(coding.size()) {
    const std::size_t m = design.alternatives();
    counts_.assign(design.choice_sets.size(), std::vector<double>(m, 0.0));
    for (const auto& o : observations) {
      if (o.choice_set_index >= design.choice_sets.size())
        throw ValidationError(fmt::format("observation for respondent '{}' references choice set {} of {}",
                                          o.respondent_id, o.choice_set_index, design.choice_sets.size()));
      if (o.chosen_alternative >= m)
        throw ValidationError(fmt::format("observation for respondent '{}' chooses alternative {} of {}",
                                          o.respondent_id, o.chosen_alternative, m));
      counts_[o.choice_set_index][o.chosen_alternative] += 1.0;
    }
    for (std::size_t s = 0; s < design.choice_sets.size(); ++s) {
      const double n_s = std::accumulate(counts_[s].begin(), counts_[s].end(), 0.0);
      if (n_s == 0.0) continue;
      sets_.push_back({coding.choice_set_rows(design, design.choice_sets[s]), counts_[s], n_s});
    }
  }

  /// Log-likelihood; fills the gradient and the information matrix (negative
  /// Hessian) when requested.
  double evaluate(std::span<const double> beta, std::vector<double>* grad, Matrix* info) const {
    double ll = 0.0;
    if (grad) grad->assign(p_, 0.0);
    if (info) *info = Matrix(p_, p_);
    std::vector<double> xbar(p_);
    for (const auto& set : sets_) {
      const std::size_t m = set.rows.rows();
      std::vector<double> u(m);
      for (std::size_t j = 0; j < m; ++j) u[j] = dot(set.rows.row(j), beta);
      const double mx = *std::max_element(u.begin(), u.end());
      double z = 0.0;
      for (double v : u) z += std::exp(v - mx);
      const double log_z = mx + std::log(z);
      std::vector<double> prob(m);
      for (std::size_t j = 0; j < m; ++j) {
        prob[j] = std::exp(u[j] - log_z);
        ll += set.counts[j] * (u[j] - log_z);
      }
      if (!grad && !info) continue;
      std::fill(xbar.begin(), xbar.end(), 0.0);
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t c = 0; c < p_; ++c) xbar[c] += prob[j] * set.rows(j, c);
      if (grad) {
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t c = 0; c < p_; ++c) (*grad)[c] += set.counts[j] * set.rows(j, c);
        for (std::size_t c = 0; c < p_; ++c) (*grad)[c] -= set.n * xbar[c];
      }
      if (info) {
        for (std::size_t j = 0; j < m; ++j) {
          const double w = set.n * prob[j];
          for (std::size_t a = 0; a < p_; ++a) {
            const double da = set.rows(j, a) - xbar[a];
            if (da == 0.0) continue;
            for (std::size_t b = 0; b < p_; ++b) (*info)(a, b) += w * da * (set.rows(j, b) - xbar[b]);
          }
        }
      }
    }
    return ll;
  }

private:
  struct SetData {
    Matrix rows;
    std::vector<double> counts;
    double n = 0.0;
  };
  std::size_t p_;
  std::vector<std::vector<double>> counts_;
  std::vector<SetData> sets_;
};

/// Finds the first column that is a linear combination of earlier ones and
/// names it together with the columns it depends on.
[[noreturn]] void throw_collinear(const Design& design, const DummyCoding& coding, const Matrix& info) {
  const std::size_t p = info.rows();
  std::vector<std::size_t> independent;
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<std::size_t> cols = independent;
    cols.push_back(k);
    Matrix sub(cols.size(), cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) sub(i, j) = info(cols[i], cols[j]);
    if (!lu_determinant(sub, 1e-10).singular_column) {
      independent.push_back(k);
      continue;
    }
    std::vector<std::string> names{label_text(design, coding.labels()[k])};
    if (!independent.empty()) {
      Matrix base(independent.size(), independent.size());
      std::vector<double> rhs(independent.size());
      for (std::size_t i = 0; i < independent.size(); ++i) {
        rhs[i] = info(independent[i], k);
        for (std::size_t j = 0; j < independent.size(); ++j) base(i, j) = info(independent[i], independent[j]);
      }
      if (auto coef = solve(base, rhs)) {
        for (std::size_t i = 0; i < independent.size(); ++i)
          if (std::abs((*coef)[i]) > 1e-8) names.push_back(label_text(design, coding.labels()[independent[i]]));
      }
    }
    std::string joined;
    for (const auto& n : names) joined += (joined.empty() ? "" : ", ") + n;
    throw NumericalError(fmt::format("information matrix is singular; collinear columns: {}", joined));
  }
  throw NumericalError("information matrix is singular");
}

void check_levels_present(const Design& design) {
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    std::set<std::size_t> seen;
    for (const auto& set : design.choice_sets)
      for (int id : set.profile_ids) seen.insert(design.profile(id).levels[a]);
    for (std::size_t l = 0; l < design.attributes[a].level_count(); ++l) {
      if (!seen.contains(l))
        throw ValidationError(fmt::format("level '{}' of '{}' never appears in the design",
                                          design.attributes[a].level_label(l), design.attributes[a].name));
    }
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

} // namespace

double log_likelihood(const Design& design, std::span<const ChoiceObservation> observations,
                      const PartWorths& beta) {
  const DummyCoding coding(design.attributes, beta.reference_levels);
  return ChoiceLikelihood(design, observations, coding).evaluate(beta.beta, nullptr, nullptr);
}

MnlFit fit_mnl(const Design& design, std::span<const ChoiceObservation> observations,
               std::span<const std::size_t> reference_levels, const FitOptions& options) {
  if (observations.empty()) throw ValidationError("no observations to fit");
  validate(design);
  check_levels_present(design);
  const DummyCoding coding(design.attributes,
                           std::vector<std::size_t>(reference_levels.begin(), reference_levels.end()));
  const ChoiceLikelihood lik(design, observations, coding);
  const std::size_t p = coding.size();

  std::vector<double> beta(p, 0.0), grad;
  Matrix info;
  double ll = lik.evaluate(beta, &grad, &info);
  if (!invert(info, 1e-10)) throw_collinear(design, coding, info);

  MnlFit fit;
  fit.ll_trace.push_back(ll);
  for (std::size_t it = 0;; ++it) {
    if (max_abs(grad) < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    if (it == options.max_iterations) break;
    const auto inv = invert(info, 1e-14);
    if (!inv) {
      if (max_abs(beta) > options.separation_threshold) fit.separation = true;
      else throw_collinear(design, coding, info);
      break;
    }
    std::vector<double> step(p);
    for (std::size_t r = 0; r < p; ++r) step[r] = dot(inv->row(r), grad);

    std::vector<double> candidate(p);
    double ll_candidate = ll;
    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < 50 && !accepted; ++halving, t *= 0.5) {
      for (std::size_t r = 0; r < p; ++r) candidate[r] = beta[r] + t * step[r];
      ll_candidate = lik.evaluate(candidate, nullptr, nullptr);
      accepted = std::isfinite(ll_candidate) && ll_candidate >= ll;
    }
    if (!accepted) break;
    beta = candidate;
    ll = lik.evaluate(beta, &grad, &info);
    ++fit.iterations;
    fit.ll_trace.push_back(ll);
    if (max_abs(beta) > options.separation_threshold && max_abs(grad) >= options.gradient_tolerance) {
      fit.separation = true;
      break;
    }
  }
  if (fit.separation) {
    for (std::size_t c = 0; c < p; ++c)
      if (std::abs(beta[c]) > options.separation_threshold) fit.diverging.push_back(coding.labels()[c]);
  }

  fit.estimates = make_part_worths(coding, beta);
  fit.gradient_max_norm = max_abs(grad);
  fit.n_observations = observations.size();
  fit.log_likelihood = ll;
  fit.null_log_likelihood =
      static_cast<double>(observations.size()) * std::log(1.0 / static_cast<double>(design.alternatives()));
  fit.mcfadden_r2 = 1.0 - fit.log_likelihood / fit.null_log_likelihood;
  fit.lr_statistic = 2.0 * (fit.log_likelihood - fit.null_log_likelihood);
  fit.lr_df = p;
  fit.lr_p_value = chi_square_survival(fit.lr_statistic, static_cast<double>(p));

  const auto cov = invert(info, 1e-14);
  for (std::size_t c = 0; c < p; ++c) {
    const double var = cov ? (*cov)(c, c) : std::numeric_limits<double>::infinity();
    const double se = var > 0.0 ? std::sqrt(var) : std::numeric_limits<double>::infinity();
    fit.std_errors.push_back(se);
    fit.z_values.push_back(beta[c] / se);
    fit.p_values.push_back(two_sided_normal_p(beta[c] / se));
  }
  return fit;
}

std::map<Group, MnlFit> subgroup_fit(const Design& design, std::span<const ChoiceObservation> observations,
                                     const std::map<std::string, Group>& grouping,
                                     std::span<const std::size_t> reference_levels,
                                     const FitOptions& options) {
  std::map<Group, std::vector<ChoiceObservation>> split;
  for (const auto& [id, g] : grouping) split.try_emplace(g);
  for (const auto& o : observations) {
    const auto it = grouping.find(o.respondent_id);
    if (it == grouping.end())
      throw ValidationError(fmt::format("respondent '{}' has no group assignment", o.respondent_id));
    split[it->second].push_back(o);
  }
  std::map<Group, MnlFit> out;
  for (const auto& [g, obs] : split) {
    if (obs.empty()) throw ValidationError(fmt::format("group {} has no observations", to_string(g)));
    out.emplace(g, fit_mnl(design, obs, reference_levels, options));
  }
  return out;
}

std::string_view significance_stars(double p_value) {
  if (p_value < 0.001) return "***";
  if (p_value < 0.01) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

double two_sided_normal_p(double z) {
  if (!std::isfinite(z)) return std::isnan(z) ? 1.0 : 0.0;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double chi_square_survival(double statistic, double df) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, statistic / 2.0);
}

} // namespace ratingcbc
