#include "lossval/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lossval/data_io.hpp"
#include "lossval/errors.hpp"
#include "lossval/format.hpp"
#include "lossval/parallel.hpp"

namespace lossval::bench {
namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kSelectStream = 10;
constexpr std::uint32_t kCorruptStream = 11;

std::vector<std::size_t> sorted_copy(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-12; }

struct MethodSpec {
  std::string name;
  std::size_t epochs = 0;
};

MethodSpec parse_method(std::string_view text, std::size_t default_epochs) {
  MethodSpec m;
  const auto colon = text.find(':');
  m.name = std::string(text.substr(0, colon));
  m.epochs = default_epochs;
  if (colon != std::string_view::npos) {
    const double e = parse_double(text.substr(colon + 1));
    if (!(e >= 1.0) || e != std::floor(e)) {
      throw ConfigError("bad epoch suffix in method '" + std::string(text) + "'");
    }
    m.epochs = static_cast<std::size_t>(e);
  }
  static const std::vector<std::string> others{"loo", "knn_shapley", "random", "oracle"};
  if (std::find(others.begin(), others.end(), m.name) == others.end()) {
    parse_variant(m.name);  // throws ConfigError on unknown names
  }
  return m;
}

std::uint64_t cell_seed(const SuiteConfig& suite, const CellKey& key) {
  std::string text = std::to_string(suite.seed) + '|' + key.dataset + '|' +
                     std::to_string(key.repetition) + '|' + std::string(to_string(key.kind)) +
                     '|' + format_double(key.rate);
  return fnv1a(text);
}

std::uint64_t sub_seed(std::uint64_t seed, std::string_view what) {
  return fnv1a(std::to_string(seed) + '|' + std::string(what));
}

Dataset load_source(const SuiteConfig& suite, const std::string& name, std::uint64_t seed) {
  const std::size_t total = suite.n_train + suite.n_val + suite.n_test;
  if (name == "blobs") {
    return data::synth_blobs(total, suite.blobs_dim, suite.blobs_classes,
                             suite.blobs_separation, seed);
  }
  if (name == "friedman1") return data::synth_friedman1(total, suite.friedman_noise, seed);
  // "<path>" for a classification CSV, "reg:<path>" for regression.
  if (name.rfind("reg:", 0) == 0) {
    return data::load_csv(name.substr(4), suite.csv_label, TaskKind::regression);
  }
  return data::load_csv(name, suite.csv_label, TaskKind::classification);
}

std::vector<double> resample_percent(std::span<const double> found) {
  // found[k] after inspecting k of N rows; sampled at round(j/100 * N).
  const std::size_t n = found.size() - 1;
  std::vector<double> out(101);
  for (std::size_t j = 0; j <= 100; ++j) {
    const auto k = static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * static_cast<double>(n) / 100.0));
    out[j] = found[k];
  }
  return out;
}

std::vector<double> pointwise_mean(const std::vector<const std::vector<double>*>& curves) {
  if (curves.empty()) return {};
  std::vector<double> out(curves.front()->size(), 0.0);
  for (const auto* c : curves) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*c)[i];
  }
  for (double& v : out) v /= static_cast<double>(curves.size());
  return out;
}

CurveReport curve_over(const Dataset& train, const Dataset& test,
                       const std::vector<std::size_t>& order, const std::vector<double>& grid,
                       bool keep_tail, const baselines::EvaluatorSpec& evaluator) {
  CurveReport report;
  report.x = grid;
  const std::size_t n = train.size();
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const auto m = static_cast<std::size_t>(std::llround(grid[s] * static_cast<double>(n)));
    std::vector<std::size_t> rows = keep_tail
                                        ? std::vector<std::size_t>(order.begin() + m, order.end())
                                        : std::vector<std::size_t>(order.begin(), order.begin() + m);
    std::sort(rows.begin(), rows.end());
    const auto fit = baselines::fit_and_score(train.subset(rows), test, evaluator);
    if (fit.degenerate) report.flagged_steps.push_back(s);
    report.y.push_back(fit.metric);
  }
  report.mean = mean_of(report.y);
  return report;
}

}  // namespace

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::label:
      return "label";
    case NoiseKind::feature:
      return "feature";
    case NoiseKind::mixed:
      return "mixed";
  }
  return "?";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "label") return NoiseKind::label;
  if (name == "feature") return NoiseKind::feature;
  if (name == "mixed") return NoiseKind::mixed;
  throw ConfigError("unknown noise kind '" + std::string(name) + "'");
}

NoisyDataset inject_noise(const Dataset& dataset, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw ConfigError("noise rate must lie in [0, 1], got " + format_double(spec.rate));
  }
  NoisyDataset out{dataset, {}, {}, {}, {}};
  const std::size_t n = dataset.size();
  const auto count = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(n)));
  if (count == 0) {
    if (spec.rate > 0.0) {
      out.warnings.push_back("rate " + format_double(spec.rate) + " of " + std::to_string(n) +
                             " rows corrupts nothing");
    }
    return out;
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto select_rng = make_rng(spec.seed, kSelectStream);
  std::shuffle(perm.begin(), perm.end(), select_rng);
  perm.resize(count);

  std::vector<std::size_t> label_rows;
  std::vector<std::size_t> feature_rows;
  switch (spec.kind) {
    case NoiseKind::label:
      label_rows = perm;
      break;
    case NoiseKind::feature:
      feature_rows = perm;
      break;
    case NoiseKind::mixed:
      label_rows.assign(perm.begin(), perm.begin() + count / 2);
      feature_rows.assign(perm.begin() + count / 2, perm.end());
      break;
  }

  auto rng = make_rng(spec.seed, kCorruptStream);
  Dataset& d = out.data;
  if (!label_rows.empty()) {
    if (d.task.is_classification()) {
      const std::size_t k = d.task.num_classes;
      std::uniform_int_distribution<std::size_t> shift(1, k - 1);
      for (std::size_t r : label_rows) {
        const auto y = static_cast<std::size_t>(d.y[r]);
        d.y[r] = static_cast<double>((y + shift(rng)) % k);
      }
    } else if (label_rows.size() == 1) {
      out.warnings.push_back("a single regression row cannot be swapped; targets unchanged");
    } else {
      const std::size_t m = label_rows.size();
      const std::size_t pairs_end = (m % 2 == 0) ? m : m - 3;
      for (std::size_t i = 0; i < pairs_end; i += 2) {
        std::swap(d.y[label_rows[i]], d.y[label_rows[i + 1]]);
      }
      if (m % 2 == 1) {
        const std::size_t a = label_rows[m - 3], b = label_rows[m - 2], c = label_rows[m - 1];
        const double ya = d.y[a];
        d.y[a] = d.y[b];
        d.y[b] = d.y[c];
        d.y[c] = ya;
      }
    }
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t r : feature_rows) {
    for (std::size_t j = 0; j < d.dim(); ++j) d.X(r, j) += gauss(rng);
  }

  out.corrupted = sorted_copy(perm);
  out.label_rows = sorted_copy(std::move(label_rows));
  out.feature_rows = sorted_copy(std::move(feature_rows));
  return out;
}

std::vector<std::size_t> ascending_order(std::span<const double> scores) {
  require_finite(scores, "scores");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

DetectionReport detection_curve(std::span<const double> scores,
                                std::span<const std::size_t> corrupted) {
  const std::size_t n = scores.size();
  std::vector<char> is_bad(n, 0);
  for (std::size_t c : corrupted) {
    if (c >= n) throw ShapeError("corrupted index " + std::to_string(c) + " out of range");
    if (is_bad[c]) throw ConfigError("duplicate corrupted index " + std::to_string(c));
    is_bad[c] = 1;
  }
  const auto order = ascending_order(scores);
  const std::size_t total = corrupted.size();

  DetectionReport rep;
  rep.fraction_inspected.reserve(n + 1);
  rep.fraction_found.reserve(n + 1);
  std::size_t found = 0;
  std::size_t found_at_budget = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0 && is_bad[order[k - 1]]) ++found;
    if (k == total) found_at_budget = found;
    rep.fraction_inspected.push_back(n == 0 ? 1.0
                                            : static_cast<double>(k) / static_cast<double>(n));
    rep.fraction_found.push_back(total == 0 ? 1.0
                                            : static_cast<double>(found) /
                                                  static_cast<double>(total));
  }
  // With a budget of |C|, precision and recall coincide.
  rep.f1 = total == 0 ? 1.0
                      : static_cast<double>(found_at_budget) / static_cast<double>(total);
  rep.curve_mean = mean_of(rep.fraction_found);
  return rep;
}

std::vector<double> removal_grid() {
  std::vector<double> g;
  for (int s = 0; s <= 10; ++s) g.push_back(0.05 * s);
  return g;
}

std::vector<double> addition_grid() {
  std::vector<double> g;
  for (int s = 1; s <= 10; ++s) g.push_back(0.05 * s);
  return g;
}

CurveReport point_removal(const Dataset& train, const Dataset& test, std::span<const double> scores,
                          const baselines::EvaluatorSpec& evaluator) {
  if (scores.size() != train.size()) throw ShapeError("one score per training row required");
  require_finite(scores, "scores");
  // Highest first; equal scores keep ascending index order.
  std::vector<std::size_t> desc(scores.size());
  std::iota(desc.begin(), desc.end(), 0);
  std::stable_sort(desc.begin(), desc.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return curve_over(train, test, desc, removal_grid(), true, evaluator);
}

CurveReport point_addition(const Dataset& train, const Dataset& test,
                           std::span<const double> scores,
                           const baselines::EvaluatorSpec& evaluator) {
  if (scores.size() != train.size()) throw ShapeError("one score per training row required");
  return curve_over(train, test, ascending_order(scores), addition_grid(), false, evaluator);
}

void SuiteConfig::validate() const {
  if (datasets.empty()) throw ConfigError("no datasets");
  if (methods.empty()) throw ConfigError("no methods");
  if (kinds.empty()) throw ConfigError("no noise kinds");
  if (rates.empty()) throw ConfigError("no noise rates");
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("noise rate out of [0, 1]: " + format_double(r));
  }
  if (repetitions == 0) throw ConfigError("repetitions must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (knn_k == 0) throw ConfigError("knn k must be positive");
  if (n_train == 0 || n_val == 0) throw ConfigError("train and validation splits must be non-empty");
  for (const auto& m : methods) parse_method(m, epochs);
}

Stat summarize(std::span<const double> values) {
  Stat s;
  const std::size_t n = values.size();
  if (n == 0) return s;
  s.mean = mean_of(values);
  if (n < 2) return s;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
    s.mean = values[0];
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  return s;
}

std::vector<CellKey> enumerate_cells(const SuiteConfig& suite) {
  std::vector<CellKey> keys;
  for (const auto& ds : suite.datasets) {
    for (const auto& m : suite.methods) {
      for (NoiseKind k : suite.kinds) {
        for (double r : suite.rates) {
          for (std::size_t rep = 0; rep < suite.repetitions; ++rep) {
            keys.push_back({ds, m, k, r, rep});
          }
        }
      }
    }
  }
  return keys;
}

CellData make_cell_data(const SuiteConfig& suite, const CellKey& key) {
  const std::uint64_t seed = cell_seed(suite, key);
  // The source draw depends on repetition only, so noise kinds and rates
  // share the underlying sample.
  const std::uint64_t source_seed =
      fnv1a(std::to_string(suite.seed) + '|' + key.dataset + '|' + std::to_string(key.repetition));
  Dataset source = load_source(suite, key.dataset, source_seed);
  auto splits = data::split_standardize(
      source, {suite.n_train, suite.n_val, suite.n_test, sub_seed(source_seed, "split")});
  NoiseSpec noise{key.kind, key.rate, sub_seed(seed, "noise")};
  CellData data{inject_noise(splits.train, noise), std::move(splits.val), std::move(splits.test)};
  return data;
}

ValuationResult run_method(const SuiteConfig& suite, const CellKey& key, const CellData& data) {
  const MethodSpec m = parse_method(key.method, suite.epochs);
  const std::uint64_t seed = sub_seed(cell_seed(suite, key), "method");
  const Dataset& train = data.train.data;
  if (m.name == "random") return baselines::random_valuation(train.size(), seed);
  if (m.name == "oracle") {
    ValuationResult r;
    r.method = "oracle";
    r.seed = seed;
    r.scores.assign(train.size(), 1.0);
    for (std::size_t c : data.train.corrupted) r.scores[c] = 0.0;
    return r;
  }
  if (m.name == "knn_shapley") return baselines::knn_shapley(train, data.val, suite.knn_k);
  if (m.name == "loo") {
    return baselines::loo_valuation(train, data.val,
                                    baselines::EvaluatorSpec::for_task(train.task.kind, seed), 1);
  }
  LossValConfig cfg = default_config(train.task.kind, m.epochs);
  cfg.variant = parse_variant(m.name);
  cfg.seed = seed;
  return train_with_lossval(train, data.val, default_mlp(train.task.kind), cfg).valuation;
}

CellRecord run_cell(const SuiteConfig& suite, const CellKey& key) {
  CellRecord rec;
  rec.key = key;
  try {
    const CellData data = make_cell_data(suite, key);
    const ValuationResult val = run_method(suite, key, data);
    const auto det = detection_curve(val.scores, data.train.corrupted);
    rec.f1 = det.f1;
    rec.detection_mean = det.curve_mean;
    rec.detection_curve = resample_percent(det.fraction_found);
    if (suite.curves && same_rate(key.rate, suite.curve_rate)) {
      const auto evaluator = baselines::EvaluatorSpec::for_task(
          data.train.data.task.kind, sub_seed(cell_seed(suite, key), "evaluator"));
      rec.removal = point_removal(data.train.data, data.test, val.scores, evaluator).y;
      rec.addition = point_addition(data.train.data, data.test, val.scores, evaluator).y;
    }
  } catch (const std::exception& e) {
    rec = CellRecord{};
    rec.key = key;
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

ExperimentReport aggregate(const SuiteConfig& suite, std::vector<CellRecord> cells) {
  ExperimentReport rep;
  rep.suite = suite;
  rep.cells = std::move(cells);

  for (const auto& ds : suite.datasets) {
    const std::size_t first_row = rep.aggregates.size();
    for (const auto& m : suite.methods) {
      for (NoiseKind k : suite.kinds) {
        for (double r : suite.rates) {
          AggregateRow row;
          row.dataset = ds;
          row.method = m;
          row.kind = k;
          row.rate = r;
          std::vector<double> f1, det, rem, add;
          std::vector<const std::vector<double>*> det_c, rem_c, add_c;
          for (const auto& c : rep.cells) {
            if (c.key.dataset != ds || c.key.method != m || c.key.kind != k ||
                !same_rate(c.key.rate, r)) {
              continue;
            }
            if (!c.ok) {
              ++row.failed;
              continue;
            }
            ++row.n;
            f1.push_back(c.f1);
            det.push_back(c.detection_mean);
            det_c.push_back(&c.detection_curve);
            if (!c.removal.empty()) {
              rem.push_back(mean_of(c.removal));
              rem_c.push_back(&c.removal);
              add.push_back(mean_of(c.addition));
              add_c.push_back(&c.addition);
            }
          }
          row.f1 = summarize(f1);
          row.detection_mean = summarize(det);
          row.removal_mean = summarize(rem);
          row.addition_mean = summarize(add);
          row.detection_curve = pointwise_mean(det_c);
          row.removal_curve = pointwise_mean(rem_c);
          row.addition_curve = pointwise_mean(add_c);
          rep.aggregates.push_back(std::move(row));
        }
      }
    }
    // Regression metrics are negative MSE on an arbitrary scale; rescale
    // curves to [0, 1] over the dataset so datasets can be averaged.
    const bool regression = ds == "friedman1" || ds.rfind("reg:", 0) == 0;
    if (!regression) continue;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = first_row; i < rep.aggregates.size(); ++i) {
      for (const auto* curve : {&rep.aggregates[i].removal_curve, &rep.aggregates[i].addition_curve}) {
        for (double v : *curve) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    for (std::size_t i = first_row; i < rep.aggregates.size(); ++i) {
      auto& row = rep.aggregates[i];
      row.normalized = true;
      auto scale = [&](const std::vector<double>& c) {
        std::vector<double> out;
        out.reserve(c.size());
        for (double v : c) out.push_back(hi > lo ? (v - lo) / (hi - lo) : 0.0);
        return out;
      };
      row.removal_curve_normalized = scale(row.removal_curve);
      row.addition_curve_normalized = scale(row.addition_curve);
    }
  }

  for (const auto& m : suite.methods) {
    for (NoiseKind k : suite.kinds) {
      OverallRow row;
      row.method = m;
      row.kind = k;
      std::vector<double> f1, det;
      for (const auto& c : rep.cells) {
        if (c.ok && c.key.method == m && c.key.kind == k) {
          f1.push_back(c.f1);
          det.push_back(c.detection_mean);
        }
      }
      row.n = f1.size();
      row.f1 = summarize(f1);
      row.detection_mean = summarize(det);
      rep.overall.push_back(std::move(row));
    }
  }
  return rep;
}

ExperimentReport run_benchmark(const SuiteConfig& suite, std::span<const std::size_t> schedule) {
  suite.validate();
  const auto keys = enumerate_cells(suite);
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  if (!schedule.empty()) {
    if (schedule.size() != keys.size()) throw ConfigError("schedule must cover every cell");
    std::vector<char> seen(keys.size(), 0);
    for (std::size_t i : schedule) {
      if (i >= keys.size() || seen[i]) throw ConfigError("schedule is not a permutation");
      seen[i] = 1;
    }
    order.assign(schedule.begin(), schedule.end());
  }
  std::vector<CellRecord> records(keys.size());
  parallel_for(order.size(), suite.jobs == 0 ? 1 : suite.jobs, [&](std::size_t pos) {
    const std::size_t idx = order[pos];
    records[idx] = run_cell(suite, keys[idx]);
  });
  return aggregate(suite, std::move(records));
}

ParityRecord parity_cell(const SuiteConfig& suite, const std::string& dataset,
                         std::size_t repetition) {
  const CellKey key{dataset, "parity", NoiseKind::label, 0.0, repetition};
  const CellData data = make_cell_data(suite, key);
  const Dataset& train = data.train.data;
  LossValConfig cfg = default_config(train.task.kind, suite.epochs);
  cfg.seed = sub_seed(cell_seed(suite, key), "method");
  const auto r = downstream_parity(train, data.val, data.test, default_mlp(train.task.kind), cfg);
  return {repetition, r.plain, r.lossval};
}

std::vector<AblationRow> ablation_rows(const ExperimentReport& report) {
  std::vector<AblationRow> rows;
  for (const auto& m : report.suite.methods) {
    std::vector<double> f1;
    for (const auto& c : report.cells) {
      if (c.ok && c.key.method == m) f1.push_back(c.f1);
    }
    rows.push_back({m, f1.size(), summarize(f1)});
  }
  return rows;
}

std::vector<AblationPair> ablation_pairs(const ExperimentReport& report) {
  const auto rows = ablation_rows(report);
  auto find = [&](std::string_view name) -> const AblationRow* {
    for (const auto& r : rows) {
      if (r.method == name) return &r;
    }
    return nullptr;
  };
  const std::pair<Variant, Variant> pairs[] = {{Variant::mult_no_square, Variant::additive},
                                               {Variant::lossval, Variant::additive_square}};
  std::vector<AblationPair> out;
  for (const auto& [mv, av] : pairs) {
    const auto* m = find(to_string(mv));
    const auto* a = find(to_string(av));
    if (m == nullptr || a == nullptr) continue;
    AblationPair p;
    p.multiplicative = m->method;
    p.additive = a->method;
    p.mult = m->f1;
    p.add = a->f1;
    p.diff = m->f1.mean - a->f1.mean;
    p.se = std::sqrt(m->f1.se * m->f1.se + a->f1.se * a->f1.se);
    p.verdict = p.diff >= 0.0 ? "ok" : (-p.diff <= p.se ? "tie" : "reversal");
    out.push_back(std::move(p));
  }
  return out;
}

bool ablation_passes(std::span<const AblationPair> pairs) {
  std::size_t ties = 0;
  for (const auto& p : pairs) {
    if (p.verdict == "reversal") return false;
    if (p.verdict == "tie") ++ties;
  }
  return ties <= 1;
}

}  // namespace lossval::bench
