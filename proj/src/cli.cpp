#include "ratingcbc/cli.hpp"

#include "ratingcbc/choice_model.hpp"
#include "ratingcbc/design.hpp"
#include "ratingcbc/error.hpp"
#include "ratingcbc/exp_mf.hpp"
#include "ratingcbc/manifest.hpp"
#include "ratingcbc/psychometrics.hpp"
#include "ratingcbc/ratings.hpp"
#include "ratingcbc/report.hpp"
#include "ratingcbc/serialize.hpp"
#include "ratingcbc/study.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace fs = std::filesystem;

namespace ratingcbc {

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string spread = "variance";
  CLI::Option* seed_opt = nullptr;
  CLI::Option* spread_opt = nullptr;
  json cfg = json::object();
};

/// Fills `value` from the config section unless the flag was given.
template <class T>
void overlay(const Globals& g, const char* section, const char* key, const CLI::Option* opt, T& value) {
  if (opt && opt->count() > 0) return;
  if (!g.cfg.contains(section) || !g.cfg.at(section).contains(key)) return;
  try {
    value = g.cfg.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("config {}.{}: {}", section, key, e.what()));
  }
}

void resolve_globals(Globals& g) {
  if (!g.config.empty()) {
    g.cfg = read_json_file(g.config);
    if (!g.cfg.is_object()) throw ValidationError(fmt::format("{}: config must be a JSON object", g.config));
  }
  if (g.seed_opt->count() == 0 && g.cfg.contains("seed")) g.seed = g.cfg.at("seed").get<std::uint64_t>();
  if (g.spread_opt->count() == 0 && g.cfg.contains("spread")) g.spread = g.cfg.at("spread").get<std::string>();
  parse_spread(g.spread);
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", g.out, ec.message()));
}

fs::path out_path(const Globals& g, const std::string& name) { return fs::path(g.out) / name; }

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(fmt::format("missing {} path", what));
  if (!fs::exists(path)) throw IoError(fmt::format("{} '{}' does not exist", what, path));
}

template <class Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw ValidationError(fmt::format("{}: '{}' is not a number", what, item));
    out.push_back(v);
  }
  if (out.size() != expected)
    throw ValidationError(fmt::format("{} needs {} comma-separated values, got {}", what, expected, out.size()));
  return out;
}

// ---- ingest

struct IngestArgs {
  std::string ratings;
  double low_rank = 30.0;
  double high_rank = 70.0;
  std::string moments = "population";
  CLI::Option *low_opt = nullptr, *high_opt = nullptr, *moments_opt = nullptr;
};

void cmd_ingest(Globals& g, IngestArgs& a, std::ostream& out) {
  overlay(g, "ingest", "ratings", nullptr, a.ratings);
  overlay(g, "ingest", "low_rank", a.low_opt, a.low_rank);
  overlay(g, "ingest", "high_rank", a.high_opt, a.high_rank);
  overlay(g, "ingest", "moments", a.moments_opt, a.moments);
  require_file(a.ratings, "ratings file");
  MomentConvention conv;
  if (a.moments == "population") conv = MomentConvention::population;
  else if (a.moments == "sample") conv = MomentConvention::sample;
  else throw ValidationError(fmt::format("moments must be 'population' or 'sample', got '{}'", a.moments));

  const auto records = read_ratings_csv(a.ratings);
  const auto stats = compute_item_stats(records, conv);
  const auto plan = build_level_plan(stats, a.low_rank, a.high_rank);

  Manifest m("ingest");
  m.input("ratings", a.ratings);
  m.parameter("low_rank", a.low_rank);
  m.parameter("high_rank", a.high_rank);
  m.parameter("moments", a.moments);

  auto emit = [&](const std::string& name, const std::string& text) {
    const auto p = out_path(g, name);
    write_text_file(p, text);
    m.output(p);
  };
  emit("item_stats.csv", to_text([&](std::ostream& os) { write_item_stats_csv(os, stats); }));
  for (auto s : {Statistic::count, Statistic::mean, Statistic::variance, Statistic::skewness}) {
    std::string text = "rank,value\n";
    for (const auto& rp : rank_distribution(stats, s)) text += fmt::format("{},{}\n", rp.rank, rp.value);
    emit(fmt::format("rank_{}.csv", to_string(s)), text);
  }
  emit("level_plan.json", dump(to_json(plan)));
  m.write(out_path(g, "manifest_ingest.json"));

  out << fmt::format("{} ratings, {} items\n", records.size(), stats.size());
  for (const auto& e : plan.entries)
    out << fmt::format("{:<9} P{:g}={:g}  P{:g}={:g}\n", to_string(e.statistic), e.low_rank, e.low, e.high_rank, e.high);
}

// ---- design

struct DesignArgs {
  std::string plan;
  bool reference = false;
  std::size_t n_sets = 16;
  std::size_t m = 2;
  std::int64_t histogram_n = 40;
  std::size_t max_iters = 1000;
  CLI::Option *sets_opt = nullptr, *m_opt = nullptr, *hist_opt = nullptr, *iters_opt = nullptr;
};

void cmd_design(Globals& g, DesignArgs& a, std::ostream& out) {
  overlay(g, "design", "plan", nullptr, a.plan);
  overlay(g, "design", "n_sets", a.sets_opt, a.n_sets);
  overlay(g, "design", "m", a.m_opt, a.m);
  overlay(g, "design", "histogram_n", a.hist_opt, a.histogram_n);
  overlay(g, "design", "max_iters", a.iters_opt, a.max_iters);
  if (a.plan.empty() && !a.reference) throw ValidationError("design needs --plan <level_plan.json> or --reference");

  Manifest m("design");
  LevelPlan plan;
  if (a.reference) {
    plan = reference_level_plan();
  } else {
    require_file(a.plan, "level plan");
    plan = level_plan_from_json(read_json_file(a.plan));
    m.input("plan", a.plan);
  }
  const auto spread = parse_spread(g.spread);
  const auto attributes = rating_summary_attributes(plan);
  auto profiles = enumerate_full_factorial(attributes);
  attach_histograms(attributes, profiles, a.histogram_n, spread);

  ChoiceSetOptions opts;
  opts.n_sets = a.n_sets;
  opts.m = a.m;
  opts.seed = g.seed;
  opts.max_iters = a.max_iters;
  const Design design = build_choice_sets(attributes, profiles, opts);
  const auto diag = diagnostics(design);

  m.seed(g.seed);
  m.parameter("n_sets", a.n_sets);
  m.parameter("m", a.m);
  m.parameter("histogram_n", a.histogram_n);
  m.parameter("max_iters", a.max_iters);
  m.parameter("spread", g.spread);
  m.parameter("reference_levels", a.reference);

  const std::string diag_text =
      fmt::format("d_efficiency={:.1f}\nlevel_balance_deviation={}\northogonality_max_corr={:.4f}\noverlap_total={}\n",
                  diag.d_efficiency, diag.level_balance_deviation, diag.orthogonality_max_corr, diag.overlap_total);
  for (const auto& [name, text] : std::vector<std::pair<std::string, std::string>>{
           {"design.json", dump(to_json(design))},
           {"diagnostics.json", dump(to_json(diag))},
           {"diagnostics.txt", diag_text},
           {"profiles.txt", render_profile_table(design)}}) {
    const auto p = out_path(g, name);
    write_text_file(p, text);
    m.output(p);
  }
  m.write(out_path(g, "manifest_design.json"));
  out << fmt::format("{} profiles, {} choice sets of {}\n", design.profiles.size(), design.choice_sets.size(),
                     design.alternatives())
      << diag_text;
}

// ---- simulate

struct SimulateArgs {
  std::string design;
  std::size_t respondents = 182;
  std::string betas;
  std::string split;
  std::string dimension = "overall";
  bool no_randomize = false;
  CLI::Option *resp_opt = nullptr, *dim_opt = nullptr;
};

PartWorths summary_part_worths(const Design& design, const SummaryBetas& b) {
  DummyCoding coding(design.attributes, rating_summary_reference_levels());
  if (coding.size() != b.size()) throw ValidationError("design does not have the rating-summary attributes");
  return make_part_worths(coding, std::vector<double>(b.begin(), b.end()));
}

void cmd_simulate(Globals& g, SimulateArgs& a, std::ostream& out) {
  overlay(g, "simulate", "design", nullptr, a.design);
  overlay(g, "simulate", "respondents", a.resp_opt, a.respondents);
  overlay(g, "simulate", "betas", nullptr, a.betas);
  overlay(g, "simulate", "split", nullptr, a.split);
  overlay(g, "simulate", "dimension", a.dim_opt, a.dimension);
  require_file(a.design, "design file");
  const Design design = design_from_json(read_json_file(a.design));

  Manifest m("simulate");
  m.input("design", a.design);
  m.seed(g.seed);
  m.parameter("randomize_order", !a.no_randomize);

  std::vector<ChoiceObservation> obs;
  if (a.split.empty()) {
    SummaryBetas b = published_all_respondents().beta;
    if (!a.betas.empty()) {
      const auto v = parse_list(a.betas, 5, "--betas");
      std::copy(v.begin(), v.end(), b.begin());
    }
    m.parameter("respondents", a.respondents);
    m.parameter("betas", b);
    SimConfig cfg{a.respondents, g.seed, !a.no_randomize};
    obs = simulate_choices(design, summary_part_worths(design, b), cfg);
  } else {
    // each group gets the published estimates for its side of the split
    require_file(a.split, "split file");
    const auto groups = read_split_csv(a.split);
    const auto dim = parse_dimension(a.dimension);
    m.input("split", a.split);
    m.parameter("dimension", a.dimension);
    for (auto grp : {Group::High, Group::Low}) {
      std::vector<std::string> ids;
      for (const auto& [id, gg] : groups)
        if (gg == grp) ids.push_back(id);
      const auto b = published_subgroup(dim, grp).beta;
      m.parameter(fmt::format("betas_{}", to_string(grp)), b);
      auto part = simulate_choices(design, summary_part_worths(design, b), ids, g.seed, !a.no_randomize);
      obs.insert(obs.end(), part.begin(), part.end());
    }
    std::stable_sort(obs.begin(), obs.end(), [](const auto& x, const auto& y) { return x.respondent_id < y.respondent_id; });
  }
  const auto p = out_path(g, "observations.csv");
  write_text_file(p, to_text([&](std::ostream& os) { write_observations_csv(os, obs); }));
  m.output(p);
  m.write(out_path(g, "manifest_simulate.json"));
  out << fmt::format("{} observations\n", obs.size());
}

// ---- fit / report

void check_design_link(const std::string& design_path, const std::string& obs_path) {
  const auto manifest = fs::path(obs_path).parent_path() / "manifest_simulate.json";
  if (!fs::exists(manifest)) return;
  const auto doc = read_json_file(manifest);
  const auto obs_hash = sha256_file(obs_path);
  const auto outputs = doc.value("outputs", json::object());
  if (outputs.value("observations.csv", std::string()) != obs_hash) return; // manifest is about another file
  const auto inputs = doc.value("inputs", json::object());
  if (!inputs.contains("design")) return;
  const auto expected = inputs.at("design").value("sha256", std::string());
  if (expected != sha256_file(design_path))
    throw ValidationError(fmt::format("observations '{}' were simulated from a different design than '{}' (hash {} vs {})",
                                      obs_path, design_path, expected.substr(0, 12),
                                      sha256_file(design_path).substr(0, 12)));
}

struct FitArgs {
  std::string design;
  std::string observations;
  std::string split;
};

void cmd_fit(Globals& g, FitArgs& a, std::ostream& out) {
  overlay(g, "fit", "design", nullptr, a.design);
  overlay(g, "fit", "observations", nullptr, a.observations);
  overlay(g, "fit", "split", nullptr, a.split);
  require_file(a.design, "design file");
  require_file(a.observations, "observations file");
  check_design_link(a.design, a.observations);
  const Design design = design_from_json(read_json_file(a.design));
  const auto obs = read_observations_csv(fs::path(a.observations));
  const auto refs = rating_summary_reference_levels();

  Manifest m("fit");
  m.input("design", a.design);
  m.input("observations", a.observations);
  json fit_json;
  std::string table;
  if (a.split.empty()) {
    const auto fit = fit_mnl(design, obs, refs);
    fit_json = to_json(design, fit);
    table = render_fit_table(design, fit);
  } else {
    require_file(a.split, "split file");
    m.input("split", a.split);
    const auto fits = subgroup_fit(design, obs, read_split_csv(a.split), refs);
    fit_json = to_json(design, fits);
    table = render_group_table(design, fits);
  }
  for (const auto& [name, text] :
       std::vector<std::pair<std::string, std::string>>{{"fit.json", dump(fit_json)}, {"fit_table.txt", table}}) {
    const auto p = out_path(g, name);
    write_text_file(p, text);
    m.output(p);
  }
  m.write(out_path(g, "manifest_fit.json"));
  out << table;
}

struct ReportArgs {
  std::string design;
  std::string observations;
  std::string split;
};

void cmd_report(Globals& g, ReportArgs& a, std::ostream& out) {
  overlay(g, "report", "design", nullptr, a.design);
  overlay(g, "report", "observations", nullptr, a.observations);
  overlay(g, "report", "split", nullptr, a.split);
  require_file(a.design, "design file");
  const Design design = design_from_json(read_json_file(a.design));
  const auto diag = diagnostics(design);
  std::string text = render_profile_table(design);
  text += "\nChoice sets:";
  for (const auto& s : design.choice_sets) {
    text += " (";
    for (std::size_t i = 0; i < s.profile_ids.size(); ++i) text += fmt::format("{}{}", i ? "," : "", s.profile_ids[i]);
    text += ")";
  }
  text += fmt::format("\nD-efficiency {:.1f}, overlap {}, balance deviation {}\n", diag.d_efficiency,
                      diag.overlap_total, diag.level_balance_deviation);
  Manifest m("report");
  m.input("design", a.design);
  if (!a.observations.empty()) {
    require_file(a.observations, "observations file");
    check_design_link(a.design, a.observations);
    m.input("observations", a.observations);
    const auto obs = read_observations_csv(fs::path(a.observations));
    const auto refs = rating_summary_reference_levels();
    text += "\n" + render_fit_table(design, fit_mnl(design, obs, refs));
    if (!a.split.empty()) {
      require_file(a.split, "split file");
      m.input("split", a.split);
      text += "\n" + render_group_table(design, subgroup_fit(design, obs, read_split_csv(a.split), refs));
    }
  }
  const auto p = out_path(g, "report.txt");
  write_text_file(p, text);
  m.output(p);
  m.write(out_path(g, "manifest_report.json"));
  out << text;
}

// ---- split

struct SplitArgs {
  std::string responses;
  std::size_t synthetic = 0;
  std::string dimension = "overall";
  CLI::Option *dim_opt = nullptr, *syn_opt = nullptr;
};

void cmd_split(Globals& g, SplitArgs& a, std::ostream& out) {
  overlay(g, "split", "responses", nullptr, a.responses);
  overlay(g, "split", "synthetic", a.syn_opt, a.synthetic);
  overlay(g, "split", "dimension", a.dim_opt, a.dimension);
  const auto dim = parse_dimension(a.dimension);
  Manifest m("split");
  std::vector<ScaleResponse> responses;
  auto emit = [&](const std::string& name, const std::string& text) {
    const auto p = out_path(g, name);
    write_text_file(p, text);
    m.output(p);
  };
  if (!a.responses.empty()) {
    require_file(a.responses, "responses file");
    responses = read_responses_csv(fs::path(a.responses));
    m.input("responses", a.responses);
  } else if (a.synthetic > 0) {
    responses = synthetic_scale_responses(a.synthetic, g.seed);
    m.seed(g.seed);
    m.parameter("synthetic", a.synthetic);
    emit("scale_responses.csv", to_text([&](std::ostream& os) { write_responses_csv(os, responses); }));
  } else {
    throw ValidationError("split needs --responses <csv> or --synthetic <n>");
  }
  m.parameter("dimension", a.dimension);
  const auto profiles = score(responses);
  const auto split = median_split(profiles, dim);

  json rel = json::object();
  for (auto d : {Dimension::alternative_search, Dimension::decision_difficulty, Dimension::high_standards,
                 Dimension::overall}) {
    try {
      rel[std::string(to_string(d))] = cronbach_alpha(item_matrix(responses, d));
    } catch (const ValidationError&) {
      rel[std::string(to_string(d))] = nullptr;
    }
  }
  emit("scale_profiles.csv", to_text([&](std::ostream& os) { write_profiles_csv(os, profiles); }));
  emit("split.csv", to_text([&](std::ostream& os) { write_split_csv(os, split); }));
  emit("reliability.json", dump(json{{"cronbach_alpha", rel},
                                     {"dimension", a.dimension},
                                     {"split_value", split.split_value},
                                     {"n_high", split.n_high},
                                     {"n_low", split.n_low},
                                     {"degenerate", split.degenerate}}));
  m.write(out_path(g, "manifest_split.json"));
  out << fmt::format("{} respondents split on {} at {:g}: {} High, {} Low{}\n", responses.size(), a.dimension,
                     split.split_value, split.n_high, split.n_low, split.degenerate ? " (degenerate)" : "");
}

// ---- mf

struct MfArgs {
  std::string ratings;
  std::string betas;
  std::string user;
  Hyperparams h;
  CLI::Option *phi = nullptr, *delta = nullptr, *lr = nullptr, *epochs = nullptr, *k = nullptr, *init = nullptr;
};

void cmd_mf(Globals& g, MfArgs& a, std::ostream& out) {
  overlay(g, "mf", "ratings", nullptr, a.ratings);
  overlay(g, "mf", "betas", nullptr, a.betas);
  overlay(g, "mf", "user", nullptr, a.user);
  overlay(g, "mf", "phi", a.phi, a.h.phi);
  overlay(g, "mf", "delta", a.delta, a.h.delta);
  overlay(g, "mf", "learning_rate", a.lr, a.h.learning_rate);
  overlay(g, "mf", "epochs", a.epochs, a.h.epochs);
  overlay(g, "mf", "k", a.k, a.h.k);
  overlay(g, "mf", "init_scale", a.init, a.h.init_scale);
  a.h.seed = g.seed;
  validate(a.h);
  require_file(a.ratings, "ratings file");

  const auto records = read_ratings_csv(a.ratings);
  const auto data = RatingMatrix::from_records(records);
  const auto items = stats_in_item_order(data, compute_item_stats(records));
  const auto published = published_all_respondents().beta;
  AttributeTriple betas{published[1], published[2], published[3]};
  if (!a.betas.empty()) {
    const auto v = parse_list(a.betas, 3, "--betas");
    betas = {v[0], v[1], v[2]};
  }
  UtilityParams params;
  params.normalization = zscore_normalization(items);
  params.gamma = {gamma_from_part_worths(betas, reference_level_gaps(), params.normalization)};
  const Matrix u = utility_table(params, items, data.n_users());
  const auto result = train_sgd(data, u, a.h);

  Manifest m("mf");
  m.input("ratings", a.ratings);
  m.seed(g.seed);
  m.parameter("hyperparams", to_json(a.h));
  m.parameter("betas", betas);
  auto emit = [&](const std::string& name, const std::string& text) {
    const auto p = out_path(g, name);
    write_text_file(p, text);
    m.output(p);
  };
  emit("model.json", dump(to_json(result.model, a.h, result.loss_trace.back())));
  std::string trace = "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) trace += fmt::format("{},{}\n", e + 1, result.loss_trace[e]);
  emit("loss_trace.csv", trace);

  if (a.h.k == 2) {
    const std::string user_id = a.user.empty() ? data.user_ids().front() : a.user;
    const auto ui = data.user_index(user_id);
    if (!ui) throw ValidationError(fmt::format("unknown user '{}'", user_id));
    const auto pts = project_latent(result.model, *ui, item_utilities(params, items, *ui), data.item_ids(), user_id);
    std::string csv = "x,y,kind,item_id\n";
    for (const auto& p : pts)
      csv += fmt::format("{},{},{},{}\n", p.x, p.y, to_string(p.kind), p.kind == PointKind::user ? "" : p.id);
    emit("projection.csv", csv);
    emit("projection.svg",
         render_projection_svg(pts, fmt::format("user {} (delta = {:g})", user_id, a.h.delta)));
  } else {
    out << "k != 2: latent projection skipped\n";
  }
  m.write(out_path(g, "manifest_mf.json"));
  out << fmt::format("{} users, {} items, {} ratings; final loss {:.4f}\n", data.n_users(), data.n_items(),
                     data.entries().size(), result.loss_trace.back());
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rating-summary choice experiments and utility-aware matrix factorization", "ratingcbc"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config; keys per subcommand, flags take precedence");
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for stochastic steps");
  app.add_option("--out", g.out, "Output directory");
  g.spread_opt = app.add_option("--spread", g.spread, "Spread level meaning: variance or stddev");

  std::function<void()> action;

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Item statistics, rank distributions and level plan");
  ingest->add_option("--ratings", ia.ratings, "Ratings CSV (user_id,item_id,rating)");
  ia.low_opt = ingest->add_option("--low-rank", ia.low_rank, "Percentile rank for L1");
  ia.high_opt = ingest->add_option("--high-rank", ia.high_rank, "Percentile rank for L2");
  ia.moments_opt = ingest->add_option("--moments", ia.moments, "population or sample");
  ingest->callback([&] { action = [&] { cmd_ingest(g, ia, out); }; });

  DesignArgs da;
  auto* design = app.add_subcommand("design", "Profiles, histograms and choice sets");
  design->add_option("--plan", da.plan, "Level plan JSON from ingest");
  design->add_flag("--reference", da.reference, "Use the published level values");
  da.sets_opt = design->add_option("--n-sets", da.n_sets, "Number of choice sets");
  da.m_opt = design->add_option("--m", da.m, "Alternatives per set");
  da.hist_opt = design->add_option("--histogram-n", da.histogram_n, "Ratings per synthesized histogram");
  da.iters_opt = design->add_option("--max-iters", da.max_iters, "Swap search iterations");
  design->callback([&] { action = [&] { cmd_design(g, da, out); }; });

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Simulated respondents choosing by logit probabilities");
  simulate->add_option("--design", sa.design, "Design JSON");
  sa.resp_opt = simulate->add_option("--respondents", sa.respondents, "Number of respondents");
  simulate->add_option("--betas", sa.betas, "Five comma-separated part-worths");
  simulate->add_option("--split", sa.split, "Group file; groups use the published subgroup estimates");
  sa.dim_opt = simulate->add_option("--dimension", sa.dimension, "Split dimension for --split");
  simulate->add_flag("--no-randomize", sa.no_randomize, "Keep task and alternative order fixed");
  simulate->callback([&] { action = [&] { cmd_simulate(g, sa, out); }; });

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Multinomial logit estimation");
  fit->add_option("--design", fa.design, "Design JSON");
  fit->add_option("--observations", fa.observations, "Observations CSV");
  fit->add_option("--split", fa.split, "Group file for subgroup fits");
  fit->callback([&] { action = [&] { cmd_fit(g, fa, out); }; });

  SplitArgs pa;
  auto* split = app.add_subcommand("split", "Maximization scale scoring and median split");
  split->add_option("--responses", pa.responses, "Scale responses CSV");
  pa.syn_opt = split->add_option("--synthetic", pa.synthetic, "Generate this many synthetic respondents");
  pa.dim_opt = split->add_option("--dimension", pa.dimension,
                                 "overall, alternative_search, decision_difficulty or high_standards");
  split->callback([&] { action = [&] { cmd_split(g, pa, out); }; });

  MfArgs ma;
  auto* mf = app.add_subcommand("mf", "Utility-aware matrix factorization");
  mf->add_option("--ratings", ma.ratings, "Ratings CSV");
  mf->add_option("--betas", ma.betas, "Count, mean and variance part-worths for the utility weights");
  mf->add_option("--user", ma.user, "User shown in the projection");
  ma.phi = mf->add_option("--phi", ma.h.phi, "L2 coefficient");
  ma.delta = mf->add_option("--delta", ma.h.delta, "Utility soft-constraint coefficient");
  ma.lr = mf->add_option("--learning-rate", ma.h.learning_rate, "SGD step size");
  ma.epochs = mf->add_option("--epochs", ma.h.epochs, "Training epochs");
  ma.k = mf->add_option("--k", ma.h.k, "Latent dimension");
  ma.init = mf->add_option("--init-scale", ma.h.init_scale, "Uniform init half-width");
  mf->callback([&] { action = [&] { cmd_mf(g, ma, out); }; });

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Profile table, diagnostics and estimate tables");
  report->add_option("--design", ra.design, "Design JSON");
  report->add_option("--observations", ra.observations, "Observations CSV");
  report->add_option("--split", ra.split, "Group file");
  report->callback([&] { action = [&] { cmd_report(g, ra, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorClass::validation);
  }

  try {
    resolve_globals(g);
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorClass::validation);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorClass::io);
  }
}

} // namespace ratingcbc
