#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lossval/baselines.hpp"
#include "lossval/bench.hpp"
#include "lossval/data_io.hpp"
#include "lossval/errors.hpp"
#include "lossval/format.hpp"
#include "knn_oracle.hpp"
#include "support.hpp"

using namespace lossval;
using namespace lossval::baselines;

namespace {

Dataset make_cls(std::size_t n, std::size_t d, int k, std::mt19937_64& rng) {
  Dataset ds;
  ds.X = testing::random_matrix(n, d, rng);
  ds.task = Task::classification(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) ds.y.push_back(static_cast<double>(rng() % k));
  return ds;
}

}  // namespace

TEST_CASE("knn shapley matches brute-force subset enumeration") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + trial % 6;
    const std::size_t k = 1 + trial % 3;
    const Dataset train = make_cls(n, 2, 2, rng);
    const Dataset val = make_cls(1 + trial % 3, 2, 2, rng);
    const auto r = knn_shapley(train, val, k);
    const auto bf = testing::brute_force_shapley(train, val, k);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r.scores[i] - bf[i]) <= 1e-9);
  }
}

TEST_CASE("knn shapley regression adaptation matches brute force") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    Dataset train;
    train.task = Task::regression();
    train.X = testing::random_matrix(7, 2, rng);
    train.y = testing::random_vector(7, rng, 0.1);
    Dataset val = train.subset(std::vector<std::size_t>{0, 3, 5});
    val.X = testing::random_matrix(3, 2, rng);
    const auto r = knn_shapley(train, val, 2);
    const auto bf = testing::brute_force_shapley(train, val, 2);
    for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(r.scores[i] - bf[i]) <= 1e-9);
    CHECK(r.config.at("tau") == format_double(knn_regression_tolerance(val)));
  }
}

TEST_CASE("knn shapley: all labels match gives 1/N each") {
  std::mt19937_64 rng(3);
  Dataset train = make_cls(10, 3, 2, rng);
  std::fill(train.y.begin(), train.y.end(), 1.0);
  Dataset val = make_cls(1, 3, 2, rng);
  val.y[0] = 1.0;
  const auto r = knn_shapley(train, val, 4);
  for (double s : r.scores) CHECK(s == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("knn shapley efficiency on 500 points") {
  std::mt19937_64 rng(4);
  const Dataset train = make_cls(500, 4, 3, rng);
  const Dataset val = make_cls(40, 4, 3, rng);
  const std::size_t k = 100;
  const auto r = knn_shapley(train, val, k);
  std::vector<std::size_t> all(500);
  std::iota(all.begin(), all.end(), 0);
  double total = 0;
  for (std::size_t v = 0; v < val.size(); ++v) {
    total += testing::knn_utility(train, val.X.row(v), val.y[v], 0.0, k, all);
  }
  CHECK(std::abs(std::accumulate(r.scores.begin(), r.scores.end(), 0.0) - total) <= 1e-9);
}

TEST_CASE("knn shapley is permutation invariant and symmetric") {
  std::mt19937_64 rng(5);
  Dataset train = make_cls(30, 3, 2, rng);
  // Row 29 duplicates row 4.
  for (std::size_t c = 0; c < 3; ++c) train.X(29, c) = train.X(4, c);
  train.y[29] = train.y[4];
  const Dataset val = make_cls(10, 3, 2, rng);
  const auto r = knn_shapley(train, val, 5);
  CHECK(std::abs(r.scores[29] - r.scores[4]) <= 1e-12);

  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto p = knn_shapley(train.subset(perm), val, 5);
  for (std::size_t i = 0; i < 30; ++i) CHECK(std::abs(p.scores[i] - r.scores[perm[i]]) <= 1e-12);
}

TEST_CASE("knn shapley clamps k above N with a note") {
  std::mt19937_64 rng(6);
  const Dataset train = make_cls(5, 2, 2, rng), val = make_cls(3, 2, 2, rng);
  const auto r = knn_shapley(train, val, 100);
  CHECK(r.config.at("k") == "5");
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("clamped") != std::string::npos);
  CHECK(r.scores == knn_shapley(train, val, 5).scores);
  CHECK_THROWS_AS(knn_shapley(train, val, 0), ConfigError);
}

TEST_CASE("random valuation") {
  CHECK(random_valuation(50, 1).scores == random_valuation(50, 1).scores);
  const auto order = [](std::uint64_t s) { return bench::ascending_order(random_valuation(50, s).scores); };
  CHECK(order(1) != order(2));
  CHECK(order(2) != order(3));
  CHECK(order(1) != order(3));
  for (double v : random_valuation(100, 4).scores) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  CHECK_THROWS(random_valuation(0, 1));
}

TEST_CASE("random scores detect at the noise rate") {
  // Monte Carlo oracle: E[F1] = p when the inspection budget equals |C|.
  std::vector<std::size_t> corrupted(200);
  std::iota(corrupted.begin(), corrupted.end(), 0);
  double sum = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    sum += bench::detection_curve(random_valuation(1000, s).scores, corrupted).f1;
  }
  CHECK(std::abs(sum / 1000 - 0.2) <= 0.02);
}

TEST_CASE("evaluator compatibility and degenerate fits") {
  std::mt19937_64 rng(7);
  Dataset cls = make_cls(20, 2, 2, rng);
  EvaluatorSpec lin = EvaluatorSpec::for_task(TaskKind::regression);
  CHECK(lin.kind == ModelKind::linear_regression);
  CHECK_THROWS_AS(fit_and_score(cls, cls, lin), ConfigError);

  Dataset one = cls;
  std::fill(one.y.begin(), one.y.end(), 1.0);
  const auto fs = fit_and_score(one, cls, EvaluatorSpec::for_task(TaskKind::classification));
  CHECK(fs.degenerate);
  const double frac1 = std::count(cls.y.begin(), cls.y.end(), 1.0) / 20.0;
  CHECK(fs.metric == frac1);
}

TEST_CASE("loo on two separable points, by hand") {
  Dataset d;
  d.task = Task::classification(2);
  d.X = Matrix::from_rows({{-2.0}, {2.0}});
  d.y = {0, 1};
  const auto r = loo_valuation(d, d, EvaluatorSpec::for_task(TaskKind::classification, 1));
  // Full model separates (accuracy 1); each removal leaves one class and a
  // constant predictor that is right on half the validation set.
  CHECK(r.scores == std::vector<double>{0.5, 0.5});
  CHECK(r.flagged == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(loo_valuation(d.subset(std::vector<std::size_t>{0}), d,
                                EvaluatorSpec::for_task(TaskKind::classification)),
                  ConfigError);
}

TEST_CASE("loo with a data-independent learner scores zero") {
  std::mt19937_64 rng(8);
  const Dataset half = make_cls(15, 3, 3, rng);
  std::vector<std::size_t> twice(30);
  for (std::size_t i = 0; i < 30; ++i) twice[i] = i % 15;
  const Dataset train = half.subset(twice);
  auto spec = EvaluatorSpec::for_task(TaskKind::classification, 2);
  spec.epochs = 0;
  const auto r = loo_valuation(train, make_cls(10, 3, 3, rng), spec);
  for (double s : r.scores) CHECK(s == 0.0);
}

TEST_CASE("loo: duplicates matter less than a corrupted singleton") {
  std::mt19937_64 rng(9);
  Dataset base;
  base.task = Task::regression();
  base.X = testing::random_matrix(20, 2, rng);
  for (std::size_t i = 0; i < 20; ++i) base.y.push_back(base.X(i, 0) - 0.5 * base.X(i, 1));
  std::vector<std::size_t> twice(40);
  for (std::size_t i = 0; i < 40; ++i) twice[i] = i % 20;
  Dataset train = base.subset(twice);
  // One extra point with a wildly wrong target.
  Matrix x(41, 2);
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = train.X(i, 0);
    x(i, 1) = train.X(i, 1);
  }
  x(40, 0) = 2.0;
  x(40, 1) = 0.0;
  train.X = x;
  train.y.push_back(-8.0);
  Dataset val = base;
  val.X = testing::random_matrix(30, 2, rng);
  val.y.clear();
  for (std::size_t i = 0; i < 30; ++i) val.y.push_back(val.X(i, 0) - 0.5 * val.X(i, 1));

  auto spec = EvaluatorSpec::for_task(TaskKind::regression, 3);
  spec.epochs = 400;
  const auto r = loo_valuation(train, val, spec);
  double dup = 0;
  for (std::size_t i = 0; i < 40; ++i) dup = std::max(dup, std::abs(r.scores[i]));
  CHECK(r.scores[40] < 0.0);
  CHECK(dup < 0.25 * std::abs(r.scores[40]));
}

TEST_CASE("loo is deterministic and independent of the thread count") {
  std::mt19937_64 rng(10);
  const Dataset train = make_cls(40, 3, 2, rng), val = make_cls(20, 3, 2, rng);
  const auto spec = EvaluatorSpec::for_task(TaskKind::classification, 4);
  const auto a = loo_valuation(train, val, spec, 1);
  CHECK(a.scores == loo_valuation(train, val, spec, 1).scores);
  CHECK(a.scores == loo_valuation(train, val, spec, 3).scores);
}
