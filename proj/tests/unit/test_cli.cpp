#include "ratingcbc/cli.hpp"
#include "ratingcbc/manifest.hpp"
#include "ratingcbc/serialize.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace ratingcbc;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ratingcbc_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kRatings = std::string(RATINGCBC_DATA_DIR) + "/fixture/hotel_ratings.csv";
const std::string kResponses = std::string(RATINGCBC_DATA_DIR) + "/fixture/scale_responses.csv";

} // namespace

TEST_SUITE("cli") {
  TEST_CASE("ingest emits the published levels and is deterministic") {
    const auto dir = scratch("ingest");
    auto r = run({"--out", (dir / "a").string(), "ingest", "--ratings", kRatings});
    REQUIRE(r.code == 0);
    const auto plan = level_plan_from_json(read_json_file(dir / "a" / "level_plan.json"));
    CHECK(plan.at(Statistic::count).low == 20);
    CHECK(plan.at(Statistic::count).high == 70);
    CHECK(plan.at(Statistic::skewness).low == -1.2);
    for (const char* f : {"item_stats.csv", "rank_count.csv", "rank_mean.csv", "rank_variance.csv",
                          "rank_skewness.csv", "manifest_ingest.json"})
      CHECK(fs::exists(dir / "a" / f));
    r = run({"--out", (dir / "b").string(), "ingest", "--ratings", kRatings});
    REQUIRE(r.code == 0);
    for (const char* f : {"item_stats.csv", "level_plan.json", "rank_mean.csv", "manifest_ingest.json"})
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }

  TEST_CASE("ingest errors map to exit codes") {
    const auto dir = scratch("ingest_err");
    CHECK(run({"--out", dir.string(), "ingest", "--ratings", (dir / "missing.csv").string()}).code == 2);
    std::ofstream(dir / "empty.csv") << "user_id,item_id,rating\n";
    auto r = run({"--out", dir.string(), "ingest", "--ratings", (dir / "empty.csv").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("empty input") != std::string::npos);
    std::ofstream(dir / "bad.csv") << "user_id,item_id,rating\nu,i,3\nu,j,9\n";
    r = run({"--out", dir.string(), "ingest", "--ratings", (dir / "bad.csv").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find(":3:") != std::string::npos);
    CHECK(run({"bogus"}).code == 3);
    CHECK(run({"--spread", "range", "--out", dir.string(), "design", "--reference"}).code == 3);
  }

  TEST_CASE("pipeline: design, simulate, fit") {
    const auto dir = scratch("pipeline");
    const auto out = dir.string();
    REQUIRE(run({"--out", out, "ingest", "--ratings", kRatings}).code == 0);
    auto r = run({"--out", out, "design", "--plan", (dir / "level_plan.json").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("d_efficiency=100.0") != std::string::npos);
    CHECK(r.out.find("overlap_total=0") != std::string::npos);
    const auto first = slurp(dir / "design.json");
    REQUIRE(run({"--out", out, "design", "--plan", (dir / "level_plan.json").string()}).code == 0);
    CHECK(slurp(dir / "design.json") == first);

    r = run({"--out", out, "design", "--plan", (dir / "level_plan.json").string(), "--n-sets", "17"});
    CHECK(r.code == 3);
    CHECK(r.err.find("infeasible") != std::string::npos);

    REQUIRE(run({"--out", out, "--seed", "3", "simulate", "--design", (dir / "design.json").string()}).code == 0);
    r = run({"--out", out, "fit", "--design", (dir / "design.json").string(), "--observations",
             (dir / "observations.csv").string()});
    REQUIRE(r.code == 0);
    const auto fit = read_json_file(dir / "fit.json");
    const double published[] = {0.37, 0.89, 1.18, -0.18, 0.02};
    std::size_t k = 0;
    for (const auto& row : fit["coefficients"]) {
      if (row["baseline_flag"].get<bool>()) continue;
      CHECK(std::abs(row["beta"].get<double>() - published[k]) <= 0.15);
      ++k;
    }
    CHECK(k == 5);
    CHECK(fs::exists(dir / "fit_table.txt"));
    CHECK(fs::exists(dir / "manifest_fit.json"));

    // a design that differs from the simulated one is rejected
    const auto other = dir / "other";
    REQUIRE(run({"--out", other.string(), "--seed", "9", "design", "--reference", "--histogram-n", "20"}).code == 0);
    r = run({"--out", out, "fit", "--design", (other / "design.json").string(), "--observations",
             (dir / "observations.csv").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("different design") != std::string::npos);
    CHECK(r.err.find("observations.csv") != std::string::npos);
    CHECK(r.err.find("other") != std::string::npos);

    r = run({"--out", out, "report", "--design", (dir / "design.json").string(), "--observations",
             (dir / "observations.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("D-efficiency 100.0") != std::string::npos);
  }

  TEST_CASE("split and subgroup fit") {
    const auto dir = scratch("split");
    const auto out = dir.string();
    auto r = run({"--out", out, "split", "--responses", kResponses, "--dimension", "decision_difficulty"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "split.csv"));
    const auto rel = read_json_file(dir / "reliability.json");
    CHECK(rel["n_high"].get<int>() + rel["n_low"].get<int>() == 182);
    REQUIRE(run({"--out", out, "design", "--reference"}).code == 0);
    REQUIRE(run({"--out", out, "simulate", "--design", (dir / "design.json").string(), "--split",
                 (dir / "split.csv").string(), "--dimension", "decision_difficulty"})
                .code == 0);
    r = run({"--out", out, "fit", "--design", (dir / "design.json").string(), "--observations",
             (dir / "observations.csv").string(), "--split", (dir / "split.csv").string()});
    REQUIRE(r.code == 0);
    const auto fit = read_json_file(dir / "fit.json");
    CHECK(fit["groups"].contains("High"));
    CHECK(fit["groups"].contains("Low"));
    CHECK(run({"--out", out, "split"}).code == 3);
  }

  TEST_CASE("mf outputs keep their schema across delta") {
    const auto dir = scratch("mf");
    auto r = run({"--out", (dir / "d0").string(), "mf", "--ratings", kRatings, "--delta", "0", "--epochs", "40"});
    REQUIRE(r.code == 0);
    r = run({"--out", (dir / "d5").string(), "mf", "--ratings", kRatings, "--delta", "0.5", "--epochs", "40"});
    REQUIRE(r.code == 0);
    for (const char* f : {"model.json", "loss_trace.csv", "projection.csv", "projection.svg", "manifest_mf.json"}) {
      CHECK(fs::exists(dir / "d0" / f));
      CHECK(fs::exists(dir / "d5" / f));
    }
    auto lines = [](const std::string& text) {
      std::vector<std::string> out;
      std::istringstream in(text);
      std::string line;
      while (std::getline(in, line)) out.push_back(line);
      return out;
    };
    const auto a = lines(slurp(dir / "d0" / "projection.csv"));
    const auto b = lines(slurp(dir / "d5" / "projection.csv"));
    REQUIRE(a.size() == b.size());
    CHECK(a[0] == b[0]);
    CHECK(a != b);
    for (std::size_t i = 1; i < a.size(); ++i) {
      // same item ids in the same order, only coordinates (and no tags) differ
      CHECK(a[i].substr(a[i].rfind(',')) == b[i].substr(b[i].rfind(',')));
    }
    const auto m0 = read_json_file(dir / "d0" / "model.json");
    const auto m5 = read_json_file(dir / "d5" / "model.json");
    CHECK(m0["hyperparams"]["delta"] == 0.0);
    CHECK(m5["hyperparams"]["delta"] == 0.5);
    CHECK(m0["P"].size() == 150);
    CHECK(m0["Q"].size() == 40);

    r = run({"--out", (dir / "d5b").string(), "mf", "--ratings", kRatings, "--delta", "0.5", "--epochs", "40"});
    CHECK(slurp(dir / "d5" / "model.json") == slurp(dir / "d5b" / "model.json"));
    CHECK(run({"--out", dir.string(), "mf", "--ratings", kRatings, "--learning-rate", "50", "--epochs", "50"}).code ==
          4);
  }

  TEST_CASE("config file supplies defaults, flags win") {
    const auto dir = scratch("config");
    std::ofstream(dir / "cfg.json") << R"({"seed": 4, "design": {"reference": true, "n_sets": 17}})";
    // reference is not read from config as a path; plan comes from the flag
    auto r = run({"--config", (dir / "cfg.json").string(), "--out", dir.string(), "design", "--reference"});
    CHECK(r.code == 3); // n_sets 17 from config is infeasible
    r = run({"--config", (dir / "cfg.json").string(), "--out", dir.string(), "design", "--reference", "--n-sets",
             "16"});
    CHECK(r.code == 0);
    const auto manifest = read_json_file(dir / "manifest_design.json");
    CHECK(manifest["seed"] == 4);
    std::ofstream(dir / "broken.json") << "{";
    CHECK(run({"--config", (dir / "broken.json").string(), "--out", dir.string(), "design", "--reference"}).code == 3);
  }
}
