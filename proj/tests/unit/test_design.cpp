#include "ratingcbc/design.hpp"
#include "ratingcbc/error.hpp"
#include "ratingcbc/rng.hpp"
#include "ratingcbc/study.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <set>

using namespace ratingcbc;

namespace {

Attribute numeric(const std::string& name, std::vector<double> values) {
  Attribute a;
  a.name = name;
  for (double v : values) a.levels.emplace_back(v);
  a.role = AttributeRole::numeric;
  return a;
}

// Level values of the published profile table, rows 1..32.
struct TableRow {
  const char* origin;
  double count, mean, variance, skewness;
};

const TableRow kProfileTable[32] = {
    {"S", 20, 3.7, 0.7, -1.2}, {"S", 20, 3.7, 0.7, -0.5}, {"S", 20, 3.7, 1.3, -1.2}, {"S", 20, 3.7, 1.3, -0.5},
    {"S", 20, 4.3, 0.7, -1.2}, {"S", 20, 4.3, 0.7, -0.5}, {"S", 20, 4.3, 1.3, -1.2}, {"S", 20, 4.3, 1.3, -0.5},
    {"S", 70, 3.7, 0.7, -1.2}, {"S", 70, 3.7, 0.7, -0.5}, {"S", 70, 3.7, 1.3, -1.2}, {"S", 70, 3.7, 1.3, -0.5},
    {"S", 70, 4.3, 0.7, -1.2}, {"S", 70, 4.3, 0.7, -0.5}, {"S", 70, 4.3, 1.3, -1.2}, {"S", 70, 4.3, 1.3, -0.5},
    {"A", 20, 3.7, 0.7, -1.2}, {"A", 20, 3.7, 0.7, -0.5}, {"A", 20, 3.7, 1.3, -1.2}, {"A", 20, 3.7, 1.3, -0.5},
    {"A", 20, 4.3, 0.7, -1.2}, {"A", 20, 4.3, 0.7, -0.5}, {"A", 20, 4.3, 1.3, -1.2}, {"A", 20, 4.3, 1.3, -0.5},
    {"A", 70, 3.7, 0.7, -1.2}, {"A", 70, 3.7, 0.7, -0.5}, {"A", 70, 3.7, 1.3, -1.2}, {"A", 70, 3.7, 1.3, -0.5},
    {"A", 70, 4.3, 0.7, -1.2}, {"A", 70, 4.3, 0.7, -0.5}, {"A", 70, 4.3, 1.3, -1.2}, {"A", 70, 4.3, 1.3, -0.5},
};

double value_of(const Attribute& a, std::size_t level) { return std::get<double>(a.levels.at(level)); }

double cofactor_det(const Matrix& a) {
  const std::size_t n = a.rows();
  if (n == 1) return a(0, 0);
  double det = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    Matrix minor(n - 1, n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t cc = 0;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) minor(r - 1, cc++) = a(r, k);
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * a(0, c) * cofactor_det(minor);
  }
  return det;
}

struct Score {
  double efficiency;
  std::size_t overlap, imbalance;
};

bool strictly_better(const Score& a, const Score& b) {
  if (a.efficiency > b.efficiency + 1e-9) return true;
  if (a.efficiency < b.efficiency - 1e-9) return false;
  if (a.overlap != b.overlap) return a.overlap < b.overlap;
  return a.imbalance < b.imbalance;
}

Score score_of(const Design& d) {
  const auto diag = diagnostics(d);
  return {diag.d_efficiency, diag.overlap_total, diag.level_balance_deviation};
}

} // namespace

TEST_SUITE("design") {
  TEST_CASE("full factorial matches nested loops") {
    std::vector<Attribute> attrs{numeric("a", {1, 2, 3}), numeric("b", {1, 2}), numeric("c", {1, 2, 3, 4})};
    const auto profiles = enumerate_full_factorial(attrs);
    REQUIRE(profiles.size() == 24);
    int id = 1;
    std::size_t k = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t l = 0; l < 4; ++l) {
          CHECK(profiles[k].id == id);
          CHECK(profiles[k].levels == std::vector<std::size_t>{i, j, l});
          ++k;
          ++id;
        }
  }

  TEST_CASE("rating summary profiles match the published table row for row") {
    const auto attrs = rating_summary_attributes(reference_level_plan());
    const auto profiles = enumerate_full_factorial(attrs);
    REQUIRE(profiles.size() == 32);
    for (std::size_t r = 0; r < 32; ++r) {
      const auto& p = profiles[r];
      const auto& row = kProfileTable[r];
      CAPTURE(r);
      CHECK(p.id == static_cast<int>(r + 1));
      CHECK(attrs[0].level_label(p.levels[0]) == (row.origin[0] == 'S' ? "Similar users" : "All users"));
      CHECK(value_of(attrs[1], p.levels[1]) == row.count);
      CHECK(value_of(attrs[2], p.levels[2]) == row.mean);
      CHECK(value_of(attrs[3], p.levels[3]) == row.variance);
      CHECK(value_of(attrs[4], p.levels[4]) == row.skewness);
    }
  }

  TEST_CASE("single attribute with three levels") {
    std::vector<Attribute> attrs{numeric("a", {1, 2, 3})};
    const auto profiles = enumerate_full_factorial(attrs);
    REQUIRE(profiles.size() == 3);
    CHECK(profiles[2].levels[0] == 2);
  }

  TEST_CASE("attribute validation") {
    CHECK_THROWS_AS(validate(numeric("a", {1})), ValidationError);
    CHECK_THROWS_AS(validate(numeric("a", {1, 1})), ValidationError);
    CHECK_THROWS_AS(validate(numeric("a", {1, NAN})), ValidationError);
  }

  TEST_CASE("contrasts are orthogonal, centered and scaled") {
    for (std::size_t levels = 2; levels <= 6; ++levels) {
      const auto c = orthogonal_contrasts(levels);
      REQUIRE(c.rows() == levels);
      REQUIRE(c.cols() == levels - 1);
      for (std::size_t i = 0; i < c.cols(); ++i) {
        double sum = 0.0, ss = 0.0;
        for (std::size_t r = 0; r < levels; ++r) {
          sum += c(r, i);
          ss += c(r, i) * c(r, i);
        }
        CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(ss == doctest::Approx(static_cast<double>(levels)));
        for (std::size_t j = i + 1; j < c.cols(); ++j) {
          double d = 0.0;
          for (std::size_t r = 0; r < levels; ++r) d += c(r, i) * c(r, j);
          CHECK(d == doctest::Approx(0.0).epsilon(1e-12));
        }
      }
    }
    const auto two = orthogonal_contrasts(2);
    CHECK(two(0, 0) == 1.0);
    CHECK(two(1, 0) == -1.0);
  }

  TEST_CASE("published design: fold-over pairing") {
    const auto attrs = rating_summary_attributes(reference_level_plan());
    const auto profiles = enumerate_full_factorial(attrs);
    const auto start = std::chrono::steady_clock::now();
    const auto d = build_choice_sets(attrs, profiles, {});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 1.0);
    REQUIRE(d.choice_sets.size() == 16);
    for (const auto& s : d.choice_sets) {
      REQUIRE(s.profile_ids.size() == 2);
      CHECK(s.profile_ids[0] + s.profile_ids[1] == 33);
    }
    // the example task shows profiles 28 and 5 side by side
    bool found = false;
    for (const auto& s : d.choice_sets) found |= s.profile_ids == std::vector<int>{5, 28};
    CHECK(found);
    const auto diag = diagnostics(d);
    CHECK(diag.d_efficiency == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(diag.overlap_total == 0);
    CHECK(diag.level_balance_deviation == 0);
    CHECK(diag.orthogonality_max_corr == doctest::Approx(0.0));
  }

  TEST_CASE("encode rows match per-profile coding") {
    const auto attrs = rating_summary_attributes(reference_level_plan());
    const auto d = build_choice_sets(attrs, enumerate_full_factorial(attrs), {});
    const auto x = encode(d, Coding::contrast);
    const auto ind = encode(d, Coding::indicator);
    REQUIRE(x.rows.rows() == 32);
    REQUIRE(x.rows.cols() == 5);
    REQUIRE(ind.rows.cols() == 10);
    std::size_t r = 0;
    for (const auto& s : d.choice_sets)
      for (int id : s.profile_ids) {
        const auto& p = d.profile(id);
        for (std::size_t a = 0; a < 5; ++a) {
          CHECK(x.rows(r, a) == (p.levels[a] == 0 ? 1.0 : -1.0));
          CHECK(ind.rows(r, 2 * a) == (p.levels[a] == 0 ? 1.0 : 0.0));
          CHECK(ind.rows(r, 2 * a + 1) == (p.levels[a] == 1 ? 1.0 : 0.0));
        }
        ++r;
      }
    CHECK_THROWS_AS(d_efficiency(ind), ValidationError);
  }

  TEST_CASE("d-efficiency agrees with a cofactor determinant") {
    std::vector<Attribute> attrs{numeric("a", {1, 2, 3}), numeric("b", {1, 2}), numeric("c", {1, 2})};
    const auto profiles = enumerate_full_factorial(attrs);
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<int> ids;
      for (const auto& p : profiles) ids.push_back(p.id);
      rng.shuffle(std::span<int>(ids));
      Design d;
      d.attributes = attrs;
      d.profiles = profiles;
      for (std::size_t s = 0; s < 4; ++s) d.choice_sets.push_back({{ids[2 * s], ids[2 * s + 1]}});
      const auto x = encode(d, Coding::contrast);
      const double det = cofactor_det(cross_product(x.rows));
      if (det <= 1e-9) continue;
      const double expected = 100.0 * std::pow(det, 1.0 / 4.0) / 8.0;
      CHECK(d_efficiency(x) == doctest::Approx(expected).epsilon(1e-10));
    }
  }

  TEST_CASE("singular design raises a numerical error") {
    std::vector<Attribute> attrs{numeric("a", {1, 2}), numeric("b", {1, 2})};
    Design d;
    d.attributes = attrs;
    d.profiles = enumerate_full_factorial(attrs);
    // profiles (1,1) and (2,2): the two contrast columns coincide
    d.choice_sets = {{{1, 4}}};
    CHECK_THROWS_AS(d_efficiency(encode(d, Coding::contrast)), NumericalError);
    CHECK(diagnostics(d).d_efficiency == 0.0);
  }

  TEST_CASE("infeasible set parameters") {
    const auto attrs = rating_summary_attributes(reference_level_plan());
    const auto profiles = enumerate_full_factorial(attrs);
    ChoiceSetOptions opts;
    opts.n_sets = 17;
    CHECK_THROWS_AS(build_choice_sets(attrs, profiles, opts), ValidationError);
  }

  TEST_CASE("swap search ends in a local optimum") {
    std::vector<Attribute> attrs{numeric("a", {1, 2, 3}), numeric("b", {1, 2}), numeric("c", {1, 2})};
    const auto profiles = enumerate_full_factorial(attrs);
    for (std::uint64_t seed : {1, 2, 3}) {
      ChoiceSetOptions opts{3, 2, seed, 1000};
      const auto d = build_choice_sets(attrs, profiles, opts);
      const Score best = score_of(d);
      std::set<int> used;
      for (const auto& s : d.choice_sets) used.insert(s.profile_ids.begin(), s.profile_ids.end());
      // exchanges with unused profiles
      for (std::size_t s = 0; s < d.choice_sets.size(); ++s)
        for (std::size_t j = 0; j < 2; ++j)
          for (const auto& p : profiles) {
            if (used.contains(p.id)) continue;
            Design alt = d;
            alt.choice_sets[s].profile_ids[j] = p.id;
            CHECK_FALSE(strictly_better(score_of(alt), best));
          }
      // exchanges between sets
      for (std::size_t s = 0; s < d.choice_sets.size(); ++s)
        for (std::size_t t = s + 1; t < d.choice_sets.size(); ++t)
          for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
              Design alt = d;
              std::swap(alt.choice_sets[s].profile_ids[i], alt.choice_sets[t].profile_ids[j]);
              CHECK_FALSE(strictly_better(score_of(alt), best));
            }
    }
  }

  TEST_CASE("complete two-level factorial: pairing beats random pairings") {
    std::vector<Attribute> attrs{numeric("a", {1, 2}), numeric("b", {1, 2}), numeric("c", {1, 2})};
    const auto profiles = enumerate_full_factorial(attrs);
    ChoiceSetOptions opts{4, 2, 7, 1000};
    const auto d = build_choice_sets(attrs, profiles, opts);
    const Score best = score_of(d);
    Rng rng(123);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<int> ids{1, 2, 3, 4, 5, 6, 7, 8};
      rng.shuffle(std::span<int>(ids));
      Design alt = d;
      for (std::size_t s = 0; s < 4; ++s) alt.choice_sets[s].profile_ids = {ids[2 * s], ids[2 * s + 1]};
      CHECK_FALSE(strictly_better(score_of(alt), best));
    }
    CHECK(best.overlap == 0);
  }

  TEST_CASE("same seed gives the same design") {
    std::vector<Attribute> attrs{numeric("a", {1, 2, 3}), numeric("b", {1, 2}), numeric("c", {1, 2})};
    const auto profiles = enumerate_full_factorial(attrs);
    ChoiceSetOptions opts{4, 2, 5, 1000};
    const auto a = build_choice_sets(attrs, profiles, opts);
    const auto b = build_choice_sets(attrs, profiles, opts);
    REQUIRE(a.choice_sets.size() == b.choice_sets.size());
    for (std::size_t s = 0; s < a.choice_sets.size(); ++s)
      CHECK(a.choice_sets[s].profile_ids == b.choice_sets[s].profile_ids);
  }

  TEST_CASE("design validation catches bad references") {
    std::vector<Attribute> attrs{numeric("a", {1, 2}), numeric("b", {1, 2})};
    Design d;
    d.attributes = attrs;
    d.profiles = enumerate_full_factorial(attrs);
    d.choice_sets = {{{1, 9}}};
    CHECK_THROWS_AS(validate(d), ValidationError);
    d.choice_sets = {{{1, 1}}};
    CHECK_THROWS_AS(validate(d), ValidationError);
  }
}
