#include "lossval/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lossval/errors.hpp"
#include "lossval/format.hpp"
#include "lossval/metrics.hpp"
#include "lossval/parallel.hpp"

namespace lossval::baselines {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string_view kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::logistic_regression:
      return "logistic_regression";
    case ModelKind::linear_regression:
      return "linear_regression";
    case ModelKind::mlp:
      return "mlp";
  }
  return "?";
}

nn::MLPParams fit_linear(const Dataset& train, const EvaluatorSpec& spec) {
  const bool cls = train.task.is_classification();
  const std::size_t out = cls ? train.task.num_classes : 1;
  const std::vector<std::size_t> widths{train.dim(), out};
  std::mt19937_64 rng(spec.seed);
  auto params = nn::init_mlp(widths, nn::Activation::relu,
                             cls ? nn::Head::softmax : nn::Head::identity, rng);
  const auto kind = cls ? loss::LossKind::cross_entropy : loss::LossKind::squared_error;
  const Matrix targets = train.target_matrix();
  const std::vector<double> ones(train.size(), 1.0);
  const double inv_n = 1.0 / static_cast<double>(train.size());
  auto adam = nn::AdamState::create(params.parameter_count(), spec.lr);
  std::vector<double> flat(params.parameter_count());
  std::vector<double> grads(params.parameter_count());
  for (std::size_t step = 0; step < spec.epochs; ++step) {
    const auto fwd = nn::mlp_forward(params, train.X);
    auto lg = loss::loss_grads(kind, fwd.output, targets, ones);
    for (double& g : lg.grad_pred.data()) g *= inv_n;
    const auto bwd = nn::mlp_backward(params, fwd.trace, lg.grad_pred);
    nn::pack(bwd.grads, grads);
    nn::pack(params, flat);
    nn::adam_step(flat, grads, adam);
    nn::unpack(flat, params);
  }
  return params;
}

double constant_metric(const Dataset& train, const Dataset& eval) {
  if (eval.task.is_classification()) {
    const double cls = train.size() == 0 ? 0.0 : train.y.front();
    const auto hits = std::count(eval.y.begin(), eval.y.end(), cls);
    return eval.size() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(eval.size());
  }
  double mse = 0.0;
  for (double v : eval.y) mse += v * v;
  return eval.size() == 0 ? 0.0 : -mse / static_cast<double>(eval.size());
}

bool single_class(const Dataset& d) {
  if (!d.task.is_classification() || d.size() == 0) return false;
  return std::all_of(d.y.begin(), d.y.end(), [&](double v) { return v == d.y.front(); });
}

}  // namespace

EvaluatorSpec EvaluatorSpec::for_task(TaskKind task, std::uint64_t seed) {
  EvaluatorSpec s;
  s.kind = task == TaskKind::classification ? ModelKind::logistic_regression
                                            : ModelKind::linear_regression;
  s.seed = seed;
  s.mlp = default_mlp(task);
  return s;
}

void EvaluatorSpec::check_compatible(const Task& task) const {
  if (kind == ModelKind::logistic_regression && !task.is_classification()) {
    throw ConfigError("logistic regression evaluator on a regression task");
  }
  if (kind == ModelKind::linear_regression && task.is_classification()) {
    throw ConfigError("linear regression evaluator on a classification task");
  }
}

FitScore fit_and_score(const Dataset& train, const Dataset& eval, const EvaluatorSpec& spec) {
  spec.check_compatible(train.task);
  if (train.size() == 0 || single_class(train)) return {constant_metric(train, eval), true};
  nn::MLPParams params;
  if (spec.kind == ModelKind::mlp) {
    auto cfg = default_config(train.task.kind, spec.epochs);
    cfg.seed = spec.seed;
    params = train_plain(train, spec.mlp, cfg);
  } else {
    params = fit_linear(train, spec);
  }
  const Matrix pred = nn::mlp_predict(params, eval.X);
  if (eval.task.is_classification()) return {accuracy(pred, eval.y), false};
  return {-mean_squared_error(pred, eval.y), false};
}

ValuationResult loo_valuation(const Dataset& train, const Dataset& val, const EvaluatorSpec& spec,
                              std::size_t jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = train.size();
  if (n < 2) throw ConfigError("leave-one-out needs at least two training points");
  const FitScore full = fit_and_score(train, val, spec);

  std::vector<double> scores(n);
  std::vector<char> degenerate(n, 0);
  parallel_for(n, jobs, [&](std::size_t i) {
    std::vector<std::size_t> keep;
    keep.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) keep.push_back(j);
    }
    const FitScore without = fit_and_score(train.subset(keep), val, spec);
    scores[i] = full.metric - without.metric;
    degenerate[i] = without.degenerate ? 1 : 0;
  });

  ValuationResult r;
  r.scores = std::move(scores);
  r.method = "loo";
  r.seed = spec.seed;
  r.config = {{"evaluator", std::string(kind_name(spec.kind))},
              {"epochs", std::to_string(spec.epochs)},
              {"lr", format_double(spec.lr)},
              {"seed", std::to_string(spec.seed)}};
  for (std::size_t i = 0; i < n; ++i) {
    if (degenerate[i]) r.flagged.push_back(i);
  }
  if (full.degenerate) r.notes.push_back("full training set is degenerate");
  if (!r.flagged.empty()) {
    r.notes.push_back(std::to_string(r.flagged.size()) +
                      " removals left a degenerate training set");
  }
  r.wall_seconds = seconds_since(t0);
  return r;
}

double knn_regression_tolerance(const Dataset& val) {
  if (val.size() == 0) return 0.0;
  double mean = 0.0;
  for (double v : val.y) mean += v;
  mean /= static_cast<double>(val.size());
  double var = 0.0;
  for (double v : val.y) var += (v - mean) * (v - mean);
  return 0.1 * std::sqrt(var / static_cast<double>(val.size()));
}

ValuationResult knn_shapley(const Dataset& train, const Dataset& val, std::size_t k) {
  const auto t0 = std::chrono::steady_clock::now();
  if (k < 1) throw ConfigError("knn_shapley: k must be at least 1");
  if (train.dim() != val.dim()) throw ShapeError("knn_shapley: feature dimensions differ");
  const std::size_t n = train.size();
  ValuationResult r;
  r.method = "knn_shapley";
  if (n == 0) return r;
  if (k > n) {
    r.notes.push_back("k = " + std::to_string(k) + " exceeds training size, clamped to " +
                      std::to_string(n));
    k = n;
  }
  const bool cls = train.task.is_classification();
  const double tau = cls ? 0.0 : knn_regression_tolerance(val);
  const double kd = static_cast<double>(k);

  std::vector<double> scores(n, 0.0);
  std::vector<double> dist(n);
  std::vector<std::size_t> order(n);
  std::vector<double> s(n);
  for (std::size_t v = 0; v < val.size(); ++v) {
    const auto xv = val.X.row(v);
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = train.X.row(i);
      double d = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) d += (xi[c] - xv[c]) * (xi[c] - xv[c]);
      dist[i] = d;
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
    });
    auto match = [&](std::size_t i) {
      const double yi = train.y[order[i]];
      return (cls ? yi == val.y[v] : std::abs(yi - val.y[v]) <= tau) ? 1.0 : 0.0;
    };
    // s[i] holds the value of the (i+1)-th nearest point.
    s[n - 1] = match(n - 1) / static_cast<double>(n);
    for (std::size_t i = n - 1; i-- > 0;) {
      const double rank = static_cast<double>(i + 1);
      s[i] = s[i + 1] + (match(i) - match(i + 1)) / kd * std::min(kd, rank) / rank;
    }
    for (std::size_t i = 0; i < n; ++i) scores[order[i]] += s[i];
  }
  r.scores = std::move(scores);
  r.config = {{"k", std::to_string(k)}, {"tau", format_double(tau)}};
  r.wall_seconds = seconds_since(t0);
  return r;
}

ValuationResult random_valuation(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("random_valuation: need at least one instance");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ValuationResult r;
  r.method = "random";
  r.seed = seed;
  r.config = {{"seed", std::to_string(seed)}};
  r.scores.resize(n);
  for (double& v : r.scores) v = unif(rng);
  return r;
}

}  // namespace lossval::baselines
