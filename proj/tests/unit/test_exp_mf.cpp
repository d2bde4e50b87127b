#include "ratingcbc/error.hpp"
#include "ratingcbc/exp_mf.hpp"
#include "ratingcbc/rng.hpp"
#include "ratingcbc/study.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ratingcbc;

namespace {

ItemStats item(const std::string& id, std::int64_t count, double mean, std::optional<double> var) {
  ItemStats s;
  s.item_id = id;
  s.count = count;
  s.mean = mean;
  s.variance = var;
  return s;
}

UtilityParams shared(AttributeTriple gamma, Normalization norm = {}) {
  UtilityParams p;
  p.gamma = {gamma};
  p.normalization = norm;
  return p;
}

RatingMatrix random_ratings(Rng& rng, std::size_t users, std::size_t items, double density) {
  std::vector<RatingEntry> entries;
  for (std::size_t i = 0; i < users; ++i)
    for (std::size_t j = 0; j < items; ++j)
      if (rng.uniform() < density || (i == j % users)) entries.push_back({i, j, 1.0 + static_cast<double>(rng.below(5))});
  return RatingMatrix(users, items, entries);
}

FactorModel random_model(Rng& rng, std::size_t users, std::size_t items, std::size_t k) {
  FactorModel m{k, Matrix(users, k), Matrix(items, k)};
  for (std::size_t i = 0; i < users; ++i)
    for (std::size_t f = 0; f < k; ++f) m.P(i, f) = rng.uniform(-1, 1);
  for (std::size_t j = 0; j < items; ++j)
    for (std::size_t f = 0; f < k; ++f) m.Q(j, f) = rng.uniform(-1, 1);
  return m;
}

Matrix random_utility(Rng& rng, std::size_t users, std::size_t items) {
  Matrix u(users, items);
  for (std::size_t i = 0; i < users; ++i)
    for (std::size_t j = 0; j < items; ++j) u(i, j) = rng.uniform();
  return u;
}

// Direct transcription of the objective, one term at a time.
double loss_oracle(const FactorModel& m, const RatingMatrix& d, const Matrix& u, double phi, double delta) {
  double total = 0.0;
  for (const auto& e : d.entries()) {
    double pred = 0.0, pn = 0.0, qn = 0.0, gap = 0.0;
    for (std::size_t f = 0; f < m.k; ++f) {
      pred += m.P(e.user, f) * m.Q(e.item, f);
      pn += std::pow(m.P(e.user, f), 2);
      qn += std::pow(m.Q(e.item, f), 2);
      gap += std::pow(m.P(e.user, f) - m.Q(e.item, f), 2);
    }
    total += std::pow(e.rating - pred, 2);
    total += phi / 2.0 * (pn + qn);
    total += delta / 2.0 * gap * u(e.user, e.item);
  }
  return total;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

} // namespace

TEST_SUITE("exp_mf") {
  TEST_CASE("rating matrix from records") {
    std::vector<RatingRecord> recs{{"u2", "b", 4}, {"u1", "a", 5}, {"u1", "b", 3}};
    const auto m = RatingMatrix::from_records(recs);
    CHECK(m.n_users() == 2);
    CHECK(m.n_items() == 2);
    CHECK(m.user_ids() == std::vector<std::string>{"u1", "u2"});
    CHECK(m.entries()[0].user == 1);
    CHECK(m.entries()[0].item == 1);
    CHECK(*m.user_index("u2") == 1);
    CHECK_FALSE(m.user_index("zz").has_value());
    recs.push_back({"u1", "a", 2});
    CHECK_THROWS_AS(RatingMatrix::from_records(recs), ValidationError);
    CHECK_THROWS_AS(RatingMatrix(1, 1, {{0, 1, 3.0}}), ValidationError);
    CHECK_THROWS_AS(RatingMatrix(1, 1, {{0, 0, 6.0}}), ValidationError);
  }

  TEST_CASE("zero weights give zero utilities") {
    std::vector<ItemStats> items{item("a", 10, 3.7, 0.7), item("b", 50, 4.3, 1.3), item("c", 20, 4.0, 1.0)};
    const auto u = item_utilities(shared({0, 0, 0}), items, 0);
    for (const auto& v : u) CHECK(*v == 0.0);
  }

  TEST_CASE("utility affine in the mean") {
    std::vector<ItemStats> items{item("a", 10, 3.7, 0.7), item("b", 10, 4.0, 0.7), item("c", 10, 4.3, 0.7)};
    const auto u = item_utilities(shared({0, 1, 0}, zscore_normalization(items)), items, 0);
    CHECK(*u[0] == 0.0);
    CHECK(*u[1] == doctest::Approx(0.5));
    CHECK(*u[2] == 1.0);
  }

  TEST_CASE("published weights on ten items match a hand-evaluated weighted sum") {
    std::vector<ItemStats> items;
    Rng rng(8);
    for (int j = 0; j < 10; ++j)
      items.push_back(item("i" + std::to_string(j), 5 + static_cast<std::int64_t>(rng.below(90)), rng.uniform(3, 5),
                           rng.uniform(0.3, 1.8)));
    items.push_back(item("undefined", 1, 4.0, std::nullopt));
    const auto norm = zscore_normalization(items);
    // population mean and std over the defined items
    for (std::size_t a = 0; a < 3; ++a) {
      double mean = 0.0, ss = 0.0;
      for (int j = 0; j < 10; ++j) {
        const double x = a == 0 ? static_cast<double>(items[j].count) : a == 1 ? items[j].mean : *items[j].variance;
        mean += x / 10.0;
      }
      for (int j = 0; j < 10; ++j) {
        const double x = a == 0 ? static_cast<double>(items[j].count) : a == 1 ? items[j].mean : *items[j].variance;
        ss += (x - mean) * (x - mean);
      }
      CHECK(norm.shift[a] == doctest::Approx(mean));
      CHECK(norm.scale[a] == doctest::Approx(std::sqrt(ss / 10.0)));
    }
    const AttributeTriple gamma = gamma_from_part_worths({0.89, 1.18, -0.18}, reference_level_gaps(), norm);
    CHECK(gamma[0] == doctest::Approx(0.89 / 50.0 * norm.scale[0]));
    const auto params = shared(gamma, norm);
    // per-unit weights: the z-score shift and scale cancel under min-max
    std::vector<double> raw;
    for (int j = 0; j < 10; ++j)
      raw.push_back(0.89 / 50.0 * static_cast<double>(items[j].count) + 1.18 / 0.6 * items[j].mean -
                    0.18 / 0.6 * *items[j].variance);
    const double lo = *std::min_element(raw.begin(), raw.end()), hi = *std::max_element(raw.begin(), raw.end());
    const auto u = item_utilities(params, items, 0);
    for (int j = 0; j < 10; ++j) CHECK(*u[j] == doctest::Approx((raw[j] - lo) / (hi - lo)).epsilon(1e-12));
    CHECK_FALSE(u[10].has_value());
    CHECK_FALSE(raw_item_utility(params, items[10], 0).has_value());
  }

  TEST_CASE("per-user weights") {
    std::vector<ItemStats> items{item("a", 10, 3.7, 0.7), item("b", 80, 3.9, 0.9)};
    UtilityParams p;
    p.gamma = {{1, 0, 0}, {0, -1, 0}};
    const auto t = utility_table(p, items, 2);
    CHECK(t(0, 1) == 1.0);
    CHECK(t(1, 0) == 1.0);
    CHECK_THROWS_AS(utility_table(p, items, 3), ValidationError);
  }

  TEST_CASE("predict") {
    FactorModel m{2, Matrix(1, 2), Matrix(1, 2, 1.0)};
    CHECK(predict(m, 0, 0) == 0.0);
    m.P(0, 0) = m.P(0, 1) = 1.0;
    CHECK(predict(m, 0, 0) == 2.0);
    CHECK(predict_clamped(m, 0, 0) == 2.0);
    m.P(0, 0) = 10;
    CHECK(predict_clamped(m, 0, 0) == 5.0);
    CHECK_THROWS_AS(predict(m, 1, 0), ValidationError);
    Rng rng(1);
    const auto big = random_model(rng, 3, 3, 8);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (std::size_t f = 0; f < 8; ++f) acc += big.P(i, f) * big.Q(j, f);
        CHECK(std::abs(predict(big, i, j) - acc) < 1e-12);
      }
  }

  TEST_CASE("loss matches a term-by-term oracle") {
    Rng rng(21);
    const auto data = random_ratings(rng, 3, 3, 0.7);
    const auto m = random_model(rng, 3, 3, 2);
    const auto u = random_utility(rng, 3, 3);
    Hyperparams h;
    h.phi = 0.3;
    h.delta = 0.7;
    CHECK(std::abs(loss(m, data, u, h) - loss_oracle(m, data, u, 0.3, 0.7)) < 1e-10);
    h.delta = 0.0;
    CHECK(loss(m, data, u, h) == baseline_mf_loss(m, data, 0.3));
  }

  TEST_CASE("perfect reconstruction has zero loss") {
    FactorModel m{1, Matrix(2, 1), Matrix(2, 1)};
    m.P(0, 0) = 1;
    m.P(1, 0) = 2;
    m.Q(0, 0) = 2;
    m.Q(1, 0) = 1.5;
    RatingMatrix data(2, 2, {{0, 0, 2.0}, {1, 0, 4.0}, {1, 1, 3.0}});
    Hyperparams h;
    h.phi = 0;
    h.delta = 0;
    CHECK(loss(m, data, Matrix(2, 2, 1.0), h) == 0.0);
  }

  TEST_CASE("analytic gradient matches central differences") {
    Rng rng(5);
    for (double delta : {0.0, 0.1, 1.0}) {
      for (std::size_t n = 3; n <= 5; ++n) {
        const auto data = random_ratings(rng, n, n, 0.6);
        const auto u = random_utility(rng, n, n);
        auto m = random_model(rng, n, n, 3);
        Hyperparams h;
        h.phi = 0.2;
        h.delta = delta;
        const auto g = loss_gradient(m, data, u, h);
        const double step = 1e-5;
        auto check = [&](Matrix& target, const Matrix& grad) {
          for (std::size_t r = 0; r < target.rows(); ++r)
            for (std::size_t c = 0; c < target.cols(); ++c) {
              const double keep = target(r, c);
              target(r, c) = keep + step;
              const double up = loss(m, data, u, h);
              target(r, c) = keep - step;
              const double dn = loss(m, data, u, h);
              target(r, c) = keep;
              CHECK(rel_err(grad(r, c), (up - dn) / (2 * step)) < 1e-4);
            }
        };
        check(m.P, g.P);
        check(m.Q, g.Q);
      }
    }
  }

  TEST_CASE("scalar least squares converges") {
    RatingMatrix data(1, 1, {{0, 0, 4.0}});
    Hyperparams h;
    h.phi = 0;
    h.delta = 0;
    h.k = 1;
    h.learning_rate = 0.05;
    h.epochs = 500;
    const auto r = train_sgd(data, Matrix(1, 1), h);
    CHECK(std::abs(predict(r.model, 0, 0) - 4.0) < 1e-3);
    CHECK(r.loss_trace.size() == 500);
  }

  TEST_CASE("training is reproducible") {
    Rng rng(6);
    const auto data = random_ratings(rng, 5, 4, 0.6);
    const auto u = random_utility(rng, 5, 4);
    Hyperparams h;
    h.epochs = 30;
    const auto a = train_sgd(data, u, h);
    const auto b = train_sgd(data, u, h);
    CHECK(a.model.P == b.model.P);
    CHECK(a.model.Q == b.model.Q);
    CHECK(a.loss_trace == b.loss_trace);
    h.seed = 2;
    CHECK_FALSE(train_sgd(data, u, h).model.P == a.model.P);
  }

  TEST_CASE("loss trace descends, then stays on its plateau") {
    Rng rng(10);
    for (int rep = 0; rep < 5; ++rep) {
      const auto data = random_ratings(rng, 4, 4, 0.7);
      const auto u = random_utility(rng, 4, 4);
      Hyperparams h;
      h.phi = 0.1;
      h.delta = 0.5;
      h.learning_rate = 0.005;
      h.epochs = 400;
      h.seed = static_cast<std::uint64_t>(rep + 1);
      const auto r = train_sgd(data, u, h);
      // constant-step SGD jitters once it reaches the optimum
      const double floor = *std::min_element(r.loss_trace.begin(), r.loss_trace.end());
      const double band = floor * (1.0 + 1e-3);
      std::size_t e = 1;
      for (; e < r.loss_trace.size() && r.loss_trace[e - 1] > band; ++e)
        CHECK(r.loss_trace[e] <= r.loss_trace[e - 1]);
      for (; e < r.loss_trace.size(); ++e) CHECK(r.loss_trace[e] <= band);
    }
  }

  TEST_CASE("hotel fixture loss trace is non-increasing at a small step") {
    const auto recs = synthetic_hotel_ratings();
    const auto data = RatingMatrix::from_records(recs);
    const auto items = stats_in_item_order(data, compute_item_stats(recs));
    UtilityParams p;
    p.normalization = zscore_normalization(items);
    p.gamma = {gamma_from_part_worths({0.89, 1.18, -0.18}, reference_level_gaps(), p.normalization)};
    const auto u = utility_table(p, items, data.n_users());
    for (std::uint64_t seed : {1, 2, 3}) {
      Hyperparams h;
      h.learning_rate = 0.001;
      h.seed = seed;
      const auto r = train_sgd(data, u, h);
      for (std::size_t e = 1; e < r.loss_trace.size(); ++e) CHECK(r.loss_trace[e] <= r.loss_trace[e - 1]);
    }
  }

  TEST_CASE("divergence is reported") {
    RatingMatrix data(2, 2, {{0, 0, 5.0}, {0, 1, 1.0}, {1, 0, 4.0}, {1, 1, 5.0}});
    Hyperparams h;
    h.learning_rate = 5.0;
    h.epochs = 200;
    h.init_scale = 1.0;
    CHECK_THROWS_AS(train_sgd(data, Matrix(2, 2), h), NumericalError);
    h.learning_rate = 0;
    CHECK_THROWS_AS(train_sgd(data, Matrix(2, 2), h), ValidationError);
  }

  TEST_CASE("decile tags") {
    std::vector<std::optional<double>> u;
    for (int j = 0; j < 100; ++j) u.push_back((j * 37 % 100) / 100.0);
    const auto tags = decile_tags(u);
    CHECK(std::count(tags.begin(), tags.end(), PointKind::high) == 10);
    CHECK(std::count(tags.begin(), tags.end(), PointKind::low) == 10);

    Rng rng(4);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t n = 1 + rng.below(40);
      std::vector<std::optional<double>> v;
      for (std::size_t j = 0; j < n; ++j) {
        if (rng.below(8) == 0) v.push_back(std::nullopt);
        else v.push_back(static_cast<double>(rng.below(6)) / 5.0);
      }
      std::vector<std::size_t> order;
      for (std::size_t j = 0; j < n; ++j)
        if (v[j]) order.push_back(j);
      // descending utility, earlier item first among ties
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (*v[a] != *v[b]) return *v[a] > *v[b];
        return a < b;
      });
      const std::size_t defined = order.size();
      const std::size_t top = (defined + 9) / 10;
      const std::size_t bottom = std::min(top, defined - top);
      std::vector<PointKind> expected(n, PointKind::mid);
      for (std::size_t r = 0; r < defined; ++r) {
        if (r < top) expected[order[r]] = PointKind::high;
        else if (r >= defined - bottom) expected[order[r]] = PointKind::low;
      }
      CHECK(decile_tags(v) == expected);
    }
  }

  TEST_CASE("projection") {
    FactorModel m{2, Matrix(1, 2, 0.5), Matrix(1, 2)};
    m.Q(0, 0) = 0.25;
    m.Q(0, 1) = -1.0;
    const std::vector<std::optional<double>> u{0.0};
    const std::vector<std::string> ids{"h"};
    const auto pts = project_latent(m, 0, u, ids, "me");
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].kind == PointKind::user);
    CHECK(pts[1].x == 0.25);
    CHECK(pts[1].y == -1.0);
    CHECK(pts[1].kind == PointKind::high);
    FactorModel three{3, Matrix(1, 3), Matrix(1, 3)};
    CHECK_THROWS_AS(project_latent(three, 0, u, ids, "me"), ValidationError);
    const auto svg = render_projection_svg(pts, "t");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("<rect x=") != std::string::npos);
  }

  TEST_CASE("soft constraint pulls high-utility items toward the user") {
    const auto recs = synthetic_hotel_ratings();
    const auto data = RatingMatrix::from_records(recs);
    const auto items = stats_in_item_order(data, compute_item_stats(recs));
    UtilityParams p;
    p.normalization = zscore_normalization(items);
    p.gamma = {gamma_from_part_worths({0.89, 1.18, -0.18}, reference_level_gaps(), p.normalization)};
    const auto u = utility_table(p, items, data.n_users());
    Hyperparams h;
    h.delta = 0.0;
    const auto base = train_sgd(data, u, h);
    h.delta = 0.5;
    const auto soft = train_sgd(data, u, h);
    const double top0 = mean_decile_distance(base.model, p, items, PointKind::high);
    const double top1 = mean_decile_distance(soft.model, p, items, PointKind::high);
    const double low1 = mean_decile_distance(soft.model, p, items, PointKind::low);
    CHECK(top1 < top0);
    CHECK(top1 < low1);
  }
}
