#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "lossval/bench.hpp"
#include "lossval/data_io.hpp"
#include "lossval/errors.hpp"
#include "lossval/report_io.hpp"

using namespace lossval;
using namespace lossval::bench;

namespace {

Dataset blobs(std::size_t n, std::uint64_t seed) {
  return data::split_standardize(data::synth_blobs(n + 1001, 4, 3, 3.0, seed),
                                 {n, 1, 1000, seed})
      .train;
}

data::Splits blob_splits(std::uint64_t seed) {
  return data::split_standardize(data::synth_blobs(1401, 4, 3, 3.0, seed), {400, 1, 1000, seed});
}

SuiteConfig tiny_suite() {
  SuiteConfig s;
  s.methods = {"random"};
  s.rates = {0.2};
  s.repetitions = 2;
  s.n_train = 60;
  s.n_val = 20;
  s.n_test = 100;
  s.blobs_dim = 3;
  s.curves = false;
  return s;
}

std::vector<double> perfect_scores(std::size_t n, const std::vector<std::size_t>& corrupted) {
  std::vector<double> s(n, 1.0);
  for (std::size_t i : corrupted) s[i] = 0.0;
  return s;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("inject_noise counts and zero rate") {
  const Dataset d = blobs(1000, 1);
  const auto n = inject_noise(d, {NoiseKind::label, 0.2, 3});
  CHECK(n.corrupted.size() == 200);
  CHECK(std::is_sorted(n.corrupted.begin(), n.corrupted.end()));
  CHECK(std::set<std::size_t>(n.corrupted.begin(), n.corrupted.end()).size() == 200);

  const auto z = inject_noise(d, {NoiseKind::mixed, 0.0, 3});
  CHECK(z.corrupted.empty());
  CHECK(z.data == d);
  CHECK(z.warnings.empty());

  const auto tiny = inject_noise(blobs(10, 2), {NoiseKind::label, 0.04, 3});
  CHECK(tiny.corrupted.empty());
  CHECK(tiny.warnings.size() == 1);
  CHECK_THROWS_AS(inject_noise(d, {NoiseKind::label, 1.5, 3}), ConfigError);
}

TEST_CASE("label noise never keeps the original class") {
  const Dataset d = blobs(1000, 4);
  const auto n = inject_noise(d, {NoiseKind::label, 0.2, 9});
  std::set<std::size_t> c(n.corrupted.begin(), n.corrupted.end());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (c.count(i)) {
      CHECK(n.data.y[i] != d.y[i]);
    } else {
      CHECK(n.data.y[i] == d.y[i]);
    }
  }
  CHECK(n.data.X == d.X);
}

TEST_CASE("feature noise touches only selected rows") {
  const Dataset d = blobs(200, 5);
  const auto n = inject_noise(d, {NoiseKind::feature, 0.1, 2});
  CHECK(n.data.y == d.y);
  std::set<std::size_t> c(n.corrupted.begin(), n.corrupted.end());
  double sq = 0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.dim(); ++j) {
      const double delta = n.data.X(i, j) - d.X(i, j);
      if (!c.count(i)) {
        CHECK(delta == 0.0);
      } else {
        CHECK(delta != 0.0);
        sq += delta * delta;
        ++cnt;
      }
    }
  }
  // 80 unit-variance draws.
  CHECK(sq / cnt == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("mixed noise splits the selection disjointly") {
  const Dataset d = blobs(1000, 6);
  const auto n = inject_noise(d, {NoiseKind::mixed, 0.15, 1});
  CHECK(n.corrupted.size() == 150);
  CHECK(n.label_rows.size() == 75);
  CHECK(n.feature_rows.size() == 75);
  std::set<std::size_t> l(n.label_rows.begin(), n.label_rows.end());
  std::set<std::size_t> all(n.corrupted.begin(), n.corrupted.end());
  for (std::size_t i : n.feature_rows) CHECK(l.count(i) == 0);
  for (std::size_t i : n.label_rows) CHECK(all.count(i) == 1);
  for (std::size_t i : n.feature_rows) CHECK(all.count(i) == 1);
}

TEST_CASE("regression label noise swaps targets") {
  auto d = data::split_standardize(data::synth_friedman1(500, 1.0, 3), {400, 1, 99, 3}).train;
  for (double rate : {0.05, 0.1, 0.2, 0.0125}) {
    const auto n = inject_noise(d, {NoiseKind::label, rate, 5});
    auto a = d.y, b = n.data.y;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    std::set<std::size_t> c(n.corrupted.begin(), n.corrupted.end());
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (c.count(i)) {
        CHECK(n.data.y[i] != d.y[i]);
      } else {
        CHECK(n.data.y[i] == d.y[i]);
      }
    }
  }
}

TEST_CASE("detection curve: perfect and anti-perfect valuators") {
  const std::size_t n = 50;
  std::vector<std::size_t> c{3, 7, 11, 20, 33, 34, 40, 41, 48, 49};
  const auto perfect = detection_curve(perfect_scores(n, c), c);
  CHECK(perfect.f1 == 1.0);
  REQUIRE(perfect.fraction_found.size() == n + 1);
  CHECK(perfect.fraction_found[10] == 1.0);
  CHECK(perfect.fraction_found[9] < 1.0);
  CHECK(perfect.fraction_inspected[10] == doctest::Approx(0.2));

  auto anti = perfect_scores(n, c);
  for (double& v : anti) v = -v;
  CHECK(detection_curve(anti, c).f1 == 0.0);
}

TEST_CASE("detection curve is a monotone step function from 0 to 1") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 10; ++t) {
    std::vector<double> s(100);
    for (double& v : s) v = u(rng);
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < 100; ++i) {
      if (u(rng) < 0.2) c.push_back(i);
    }
    const auto r = detection_curve(s, c);
    CHECK(r.fraction_found.front() == 0.0);
    CHECK(r.fraction_found.back() == 1.0);
    CHECK(r.fraction_inspected.back() == 1.0);
    for (std::size_t i = 1; i < r.fraction_found.size(); ++i) {
      CHECK(r.fraction_found[i] >= r.fraction_found[i - 1]);
    }
    CHECK(r.f1 >= 0.0);
    CHECK(r.f1 <= 1.0);
    // Equal-size sets: F1 is the overlap fraction.
    const auto order = ascending_order(s);
    std::set<std::size_t> cs(c.begin(), c.end());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < c.size(); ++i) hit += cs.count(order[i]);
    CHECK(r.f1 == doctest::Approx(static_cast<double>(hit) / c.size()).epsilon(1e-15));
    // Strictly monotone transform.
    std::vector<double> e(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) e[i] = std::exp(3.0 * s[i]) - 7.0;
    const auto re = detection_curve(e, c);
    CHECK(re.fraction_found == r.fraction_found);
    CHECK(re.f1 == r.f1);
  }
}

TEST_CASE("ties break by index and inputs are checked") {
  const std::vector<double> s{1.0, 0.0, 1.0, 0.0};
  CHECK(ascending_order(s) == std::vector<std::size_t>{1, 3, 0, 2});
  const std::vector<std::size_t> c{3};
  CHECK(detection_curve(s, c).f1 == 0.0);
  const std::vector<std::size_t> bad{4};
  CHECK_THROWS(detection_curve(s, bad));
  const std::vector<std::size_t> dup{1, 1};
  CHECK_THROWS(detection_curve(s, dup));
}

TEST_CASE("removal and addition grids") {
  CHECK(removal_grid().size() == 11);
  CHECK(removal_grid().front() == 0.0);
  CHECK(removal_grid().back() == doctest::Approx(0.5));
  CHECK(addition_grid().size() == 10);
  CHECK(addition_grid().front() == doctest::Approx(0.05));
  CHECK(addition_grid().back() == doctest::Approx(0.5));
}

TEST_CASE("point removal and addition against oracle and random scores") {
  const auto sp = blob_splits(11);
  const auto noisy = inject_noise(sp.train, {NoiseKind::label, 0.2, 4});
  const auto ev = baselines::EvaluatorSpec::for_task(TaskKind::classification, 1);
  const auto perfect = perfect_scores(noisy.data.size(), noisy.corrupted);
  std::vector<double> hi(perfect.size());
  for (std::size_t i = 0; i < hi.size(); ++i) hi[i] = 1.0 - perfect[i];

  const auto base = baselines::fit_and_score(noisy.data, sp.test, ev);
  const auto rr = point_removal(noisy.data, sp.test, baselines::random_valuation(400, 3).scores, ev);
  const auto pr = point_removal(noisy.data, sp.test, perfect, ev);
  REQUIRE(pr.y.size() == 11);
  CHECK(pr.x == removal_grid());
  CHECK(pr.y[0] == base.metric);
  CHECK(rr.y[0] == base.metric);
  CHECK(rr.mean >= pr.mean);
  CHECK(pr.mean == doctest::Approx(mean(pr.y)));

  // Corrupted points valued highest: after the first 20% are gone, only
  // clean rows remain.
  const auto late = point_removal(noisy.data, sp.test, hi, ev);
  const double clean = baselines::fit_and_score(sp.train, sp.test, ev).metric;
  for (std::size_t s = 4; s < late.y.size(); ++s) CHECK(std::abs(late.y[s] - clean) <= 0.02);

  const auto pa = point_addition(noisy.data, sp.test, perfect, ev);
  const auto ra = point_addition(noisy.data, sp.test, baselines::random_valuation(400, 3).scores, ev);
  REQUIRE(pa.y.size() == 10);
  CHECK(pa.x == addition_grid());
  CHECK(pa.mean <= ra.mean);
}

TEST_CASE("first addition step depends only on the bottom 5%") {
  const auto sp = blob_splits(12);
  const auto ev = baselines::EvaluatorSpec::for_task(TaskKind::classification, 2);
  std::vector<double> a(400), b(400);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (std::size_t i = 0; i < 400; ++i) {
    a[i] = i < 20 ? -static_cast<double>(i) : u(rng);
    b[i] = i < 20 ? -static_cast<double>(i) : 5.0 - u(rng);
  }
  const auto ca = point_addition(sp.train, sp.test, a, ev);
  const auto cb = point_addition(sp.train, sp.test, b, ev);
  CHECK(ca.y[0] == cb.y[0]);
  // Monotone transform leaves the whole curve unchanged.
  for (double& v : a) v = std::tanh(v);
  CHECK(point_addition(sp.train, sp.test, a, ev).y == ca.y);
}

TEST_CASE("degenerate reduced sets are flagged, not fatal") {
  Dataset d;
  d.task = Task::classification(2);
  d.X = Matrix(20, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    d.X(i, 0) = static_cast<double>(i);
    d.y.push_back(i < 2 ? 1.0 : 0.0);
  }
  std::vector<double> s(20, 0.0);
  s[0] = s[1] = 1.0;
  const auto r = point_removal(d, d, s, baselines::EvaluatorSpec::for_task(TaskKind::classification));
  CHECK(r.y.size() == 11);
  CHECK(!r.flagged_steps.empty());
  // Step 1 drops one positive; step 2 drops both.
  CHECK(r.flagged_steps.front() == 2);
}

TEST_CASE("summarize") {
  const std::vector<double> two{0.3, 0.5};
  const auto s = summarize(two);
  CHECK(s.mean == doctest::Approx(0.4));
  CHECK(s.se == doctest::Approx(std::sqrt(0.02) / std::sqrt(2.0)));
  const std::vector<double> same{0.7, 0.7, 0.7};
  CHECK(summarize(same).se == 0.0);
  const std::vector<double> one{0.1};
  CHECK(summarize(one).se == 0.0);
}

TEST_CASE("two-cell suite aggregates with the SE formula") {
  const auto suite = tiny_suite();
  const auto cells = enumerate_cells(suite);
  REQUIRE(cells.size() == 2);
  const auto r = run_benchmark(suite);
  REQUIRE(r.cells.size() == 2);
  REQUIRE(r.aggregates.size() == 1);
  const double a = r.cells[0].f1, b = r.cells[1].f1;
  const auto& row = r.aggregates[0];
  CHECK(row.n == 2);
  CHECK(row.f1.mean == doctest::Approx((a + b) / 2));
  CHECK(row.f1.se == doctest::Approx(std::abs(a - b) / 2));

  auto oracle = suite;
  oracle.methods = {"oracle"};
  const auto o = run_benchmark(oracle);
  CHECK(o.aggregates[0].f1.mean == 1.0);
  CHECK(o.aggregates[0].f1.se == 0.0);
}

TEST_CASE("cell enumeration order") {
  auto s = tiny_suite();
  s.methods = {"random", "oracle"};
  s.rates = {0.1, 0.2};
  const auto c = enumerate_cells(s);
  REQUIRE(c.size() == 8);
  CHECK(c[0] == CellKey{"blobs", "random", NoiseKind::label, 0.1, 0});
  CHECK(c[1] == CellKey{"blobs", "random", NoiseKind::label, 0.1, 1});
  CHECK(c[2] == CellKey{"blobs", "random", NoiseKind::label, 0.2, 0});
  CHECK(c[4].method == "oracle");
}

TEST_CASE("schedule and thread count do not change the report") {
  auto s = tiny_suite();
  s.methods = {"random", "knn_shapley", "lossval:2"};
  s.kinds = {NoiseKind::label, NoiseKind::mixed};
  s.curves = true;
  const auto ref = run_benchmark(s);
  const std::size_t n = enumerate_cells(s).size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  s.jobs = 3;
  const auto shuffled = run_benchmark(s, perm);
  CHECK(report::to_json(shuffled) == report::to_json(ref));
  std::vector<std::size_t> bad(n, 0);
  CHECK_THROWS_AS(run_benchmark(s, bad), ConfigError);
}

TEST_CASE("failing cells are isolated") {
  auto s = tiny_suite();
  s.datasets = {"/nonexistent/data.csv", "blobs"};
  const auto r = run_benchmark(s);
  REQUIRE(r.cells.size() == 4);
  CHECK(!r.cells[0].ok);
  CHECK(!r.cells[0].error.empty());
  CHECK(r.cells[2].ok);
  CHECK(r.cells[3].ok);
  REQUIRE(r.aggregates.size() == 2);
  CHECK(r.aggregates[0].failed == 2);
  CHECK(r.aggregates[1].n == 2);
}

TEST_CASE("curves run at the curve rate and regression curves are normalized") {
  auto s = tiny_suite();
  s.datasets = {"friedman1"};
  s.methods = {"random", "oracle"};
  s.rates = {0.1, 0.2};
  s.repetitions = 1;
  s.curves = true;
  const auto r = run_benchmark(s);
  for (const auto& c : r.cells) {
    CHECK(c.ok);
    CHECK(c.detection_curve.size() == 101);
    CHECK(c.removal.empty() == (c.key.rate != 0.2));
    CHECK(c.addition.empty() == (c.key.rate != 0.2));
  }
  double lo = 1e300, hi = -1e300;
  for (const auto& a : r.aggregates) {
    if (a.rate != 0.2) continue;
    CHECK(a.normalized);
    for (double v : a.removal_curve_normalized) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (double v : a.addition_curve_normalized) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("report JSON round-trips and the F1 table has one column per rate") {
  auto s = tiny_suite();
  s.rates = {0.05, 0.10, 0.15, 0.20};
  s.repetitions = 1;
  s.curves = true;
  const auto r = run_benchmark(s);
  const auto text = report::to_json(r);
  CHECK(report::from_json(text) == r);
  CHECK(report::to_json(report::from_json(text)) == text);
  CHECK_THROWS_AS(report::from_json("{"), ParseError);

  const auto table = report::f1_table_csv(r);
  const auto header = table.substr(0, table.find('\n'));
  CHECK(header == "dataset,method,kind,f1_5,se_5,f1_10,se_10,f1_15,se_15,f1_20,se_20,f1_avg,se_avg");
}

TEST_CASE("plot data carries the in-memory curve points") {
  auto s = tiny_suite();
  s.repetitions = 1;
  s.curves = true;
  const auto r = run_benchmark(s);
  const auto plot = report::removal_plot_csv(r);
  std::size_t lines = std::count(plot.begin(), plot.end(), '\n');
  CHECK(lines == 1 + r.aggregates[0].removal_curve.size());
  const auto det = report::detection_plot_csv(r);
  CHECK(static_cast<std::size_t>(std::count(det.begin(), det.end(), '\n')) == 1 + 101);
}

TEST_CASE("ablation pairs and verdicts") {
  ExperimentReport r;
  r.suite.methods = {"mult_no_square", "additive", "lossval", "additive_square"};
  auto cell = [](std::string m, double f1, std::size_t rep) {
    CellRecord c;
    c.key = {"blobs", std::move(m), NoiseKind::label, 0.2, rep};
    c.f1 = f1;
    return c;
  };
  r.cells = {cell("mult_no_square", 0.5, 0), cell("mult_no_square", 0.6, 1),
             cell("additive", 0.4, 0),       cell("additive", 0.5, 1),
             cell("lossval", 0.50, 0),       cell("lossval", 0.52, 1),
             cell("additive_square", 0.52, 0), cell("additive_square", 0.54, 1)};
  const auto rows = ablation_rows(r);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].method == "mult_no_square");
  CHECK(rows[0].f1.mean == doctest::Approx(0.55));
  const auto pairs = ablation_pairs(r);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].verdict == "ok");
  CHECK(pairs[0].diff == doctest::Approx(0.1));
  // diff -0.02, se sqrt(2) * 0.01.
  CHECK(pairs[1].verdict == "reversal");
  CHECK(pairs[1].se == doctest::Approx(std::sqrt(2.0) * 0.01));
  CHECK(!ablation_passes(pairs));

  r.cells[7].f1 = 0.518;  // diff -0.009, SE about 0.01
  auto tie = ablation_pairs(r);
  CHECK(tie[1].verdict == "tie");
  CHECK(ablation_passes(tie));
}

TEST_CASE("suite validation") {
  auto s = tiny_suite();
  CHECK_NOTHROW(s.validate());
  s.methods = {"nope"};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = tiny_suite();
  s.repetitions = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = tiny_suite();
  s.rates = {1.5};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK(parse_noise_kind("mixed") == NoiseKind::mixed);
  CHECK_THROWS_AS(parse_noise_kind("salt"), ConfigError);
}
