#include "ratingcbc/serialize.hpp"

#include "ratingcbc/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace ratingcbc {

namespace {

json level_to_json(const LevelValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("field '{}': {}", key, e.what()));
  }
}

Matrix matrix_from_json(const json& j, const char* key) {
  const auto rows = get_field<std::vector<std::vector<double>>>(j, key);
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ValidationError(fmt::format("ragged matrix '{}'", key));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

} // namespace

json to_json(const Attribute& a) {
  json levels = json::array();
  for (const auto& v : a.levels) levels.push_back(level_to_json(v));
  return {{"name", a.name}, {"levels", levels}, {"unit", a.display_unit}, {"role", std::string(to_string(a.role))}};
}

Attribute attribute_from_json(const json& j) {
  Attribute a;
  a.name = get_field<std::string>(j, "name");
  for (const auto& v : get_field<json>(j, "levels")) {
    if (v.is_string()) a.levels.emplace_back(v.get<std::string>());
    else if (v.is_number()) a.levels.emplace_back(v.get<double>());
    else throw ValidationError(fmt::format("attribute '{}': levels must be strings or numbers", a.name));
  }
  if (j.contains("unit")) a.display_unit = get_field<std::string>(j, "unit");
  if (j.contains("role")) a.role = parse_attribute_role(get_field<std::string>(j, "role"));
  validate(a);
  return a;
}

json to_json(const Design& d) {
  json attrs = json::array();
  for (const auto& a : d.attributes) attrs.push_back(to_json(a));
  json profiles = json::array();
  for (const auto& p : d.profiles) {
    json levels = json::object();
    for (std::size_t a = 0; a < p.levels.size(); ++a) levels[d.attributes.at(a).name] = p.levels[a];
    json pj = {{"id", p.id}, {"levels", levels}};
    if (p.histogram) pj["histogram"] = {{"counts", p.histogram->counts}};
    profiles.push_back(std::move(pj));
  }
  json sets = json::array();
  for (const auto& s : d.choice_sets) sets.push_back(s.profile_ids);
  return {{"attributes", attrs}, {"profiles", profiles}, {"choice_sets", sets}, {"seed", d.seed}};
}

Design design_from_json(const json& j) {
  Design d;
  for (const auto& a : get_field<json>(j, "attributes")) d.attributes.push_back(attribute_from_json(a));
  for (const auto& pj : get_field<json>(j, "profiles")) {
    Profile p;
    p.id = get_field<int>(pj, "id");
    const auto levels = get_field<json>(pj, "levels");
    for (const auto& a : d.attributes) {
      if (!levels.contains(a.name))
        throw ValidationError(fmt::format("profile {} has no level for '{}'", p.id, a.name));
      p.levels.push_back(levels.at(a.name).get<std::size_t>());
    }
    if (pj.contains("histogram")) {
      RatingHistogram h;
      h.counts = get_field<std::array<std::int64_t, 5>>(pj.at("histogram"), "counts");
      p.histogram = h;
    }
    d.profiles.push_back(std::move(p));
  }
  for (const auto& s : get_field<json>(j, "choice_sets"))
    d.choice_sets.push_back({s.get<std::vector<int>>()});
  if (j.contains("seed")) d.seed = get_field<std::uint64_t>(j, "seed");
  validate(d);
  return d;
}

json to_json(const DesignDiagnostics& d) {
  return {{"d_efficiency", d.d_efficiency},
          {"level_balance_deviation", d.level_balance_deviation},
          {"orthogonality_max_corr", d.orthogonality_max_corr},
          {"overlap_total", d.overlap_total}};
}

json to_json(const LevelPlan& plan) {
  json entries = json::array();
  for (const auto& e : plan.entries)
    entries.push_back({{"statistic", std::string(to_string(e.statistic))},
                       {"low", e.low},
                       {"high", e.high},
                       {"low_rank", e.low_rank},
                       {"high_rank", e.high_rank}});
  return {{"levels", entries}};
}

LevelPlan level_plan_from_json(const json& j) {
  LevelPlan plan;
  for (const auto& ej : get_field<json>(j, "levels")) {
    LevelPlanEntry e;
    const auto name = get_field<std::string>(ej, "statistic");
    bool found = false;
    for (auto s : {Statistic::count, Statistic::mean, Statistic::variance, Statistic::skewness})
      if (to_string(s) == name) {
        e.statistic = s;
        found = true;
      }
    if (!found) throw ValidationError(fmt::format("unknown statistic '{}'", name));
    e.low = get_field<double>(ej, "low");
    e.high = get_field<double>(ej, "high");
    if (ej.contains("low_rank")) e.low_rank = get_field<double>(ej, "low_rank");
    if (ej.contains("high_rank")) e.high_rank = get_field<double>(ej, "high_rank");
    plan.entries.push_back(e);
  }
  return plan;
}

json to_json(const Design& design, const MnlFit& fit) {
  json rows = json::array();
  const auto& refs = fit.estimates.reference_levels;
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    const auto& attr = design.attributes[a];
    for (std::size_t l = 0; l < attr.level_count(); ++l) {
      if (l == refs.at(a)) continue;
      for (std::size_t k = 0; k < fit.estimates.labels.size(); ++k) {
        const auto& lab = fit.estimates.labels[k];
        if (lab.attribute != a || lab.level != l) continue;
        rows.push_back({{"attribute", attr.name},
                        {"level", attr.level_label(l)},
                        {"baseline_flag", false},
                        {"beta", fit.estimates.beta[k]},
                        {"se", fit.std_errors[k]},
                        {"z", fit.z_values[k]},
                        {"p", fit.p_values[k]},
                        {"stars", std::string(significance_stars(fit.p_values[k]))}});
      }
    }
    rows.push_back({{"attribute", attr.name}, {"level", attr.level_label(refs.at(a))}, {"baseline_flag", true}});
  }
  json diverging = json::array();
  for (const auto& lab : fit.diverging)
    diverging.push_back(fmt::format("{}={}", design.attributes.at(lab.attribute).name,
                                    design.attributes.at(lab.attribute).level_label(lab.level)));
  return {{"coefficients", rows},
          {"log_likelihood", fit.log_likelihood},
          {"null_log_likelihood", fit.null_log_likelihood},
          {"mcfadden_r2", fit.mcfadden_r2},
          {"lr_statistic", fit.lr_statistic},
          {"lr_df", fit.lr_df},
          {"lr_p_value", fit.lr_p_value},
          {"n_observations", fit.n_observations},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"separation", fit.separation},
          {"diverging", diverging}};
}

json to_json(const Design& design, const std::map<Group, MnlFit>& fits) {
  json groups = json::object();
  for (const auto& [g, fit] : fits) groups[std::string(to_string(g))] = to_json(design, fit);
  return {{"groups", groups}};
}

json to_json(const Hyperparams& h) {
  return {{"phi", h.phi},       {"delta", h.delta}, {"learning_rate", h.learning_rate}, {"epochs", h.epochs},
          {"k", h.k},           {"init_scale", h.init_scale}, {"seed", h.seed}};
}

Hyperparams hyperparams_from_json(const json& j, Hyperparams h) {
  if (j.contains("phi")) h.phi = get_field<double>(j, "phi");
  if (j.contains("delta")) h.delta = get_field<double>(j, "delta");
  if (j.contains("learning_rate")) h.learning_rate = get_field<double>(j, "learning_rate");
  if (j.contains("epochs")) h.epochs = get_field<std::size_t>(j, "epochs");
  if (j.contains("k")) h.k = get_field<std::size_t>(j, "k");
  if (j.contains("init_scale")) h.init_scale = get_field<double>(j, "init_scale");
  if (j.contains("seed")) h.seed = get_field<std::uint64_t>(j, "seed");
  validate(h);
  return h;
}

json to_json(const FactorModel& m, const Hyperparams& h, double final_loss) {
  return {{"k", m.k}, {"P", matrix_to_json(m.P)}, {"Q", matrix_to_json(m.Q)}, {"hyperparams", to_json(h)},
          {"final_loss", final_loss}};
}

FactorModel factor_model_from_json(const json& j) {
  FactorModel m;
  m.k = get_field<std::size_t>(j, "k");
  m.P = matrix_from_json(j, "P");
  m.Q = matrix_from_json(j, "Q");
  if (m.k < 1 || (m.P.rows() > 0 && m.P.cols() != m.k) || (m.Q.rows() > 0 && m.Q.cols() != m.k))
    throw ValidationError("factor matrices do not match k");
  return m;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

} // namespace ratingcbc
