#pragma once

#include <cstddef>
#include <cstdint>

#include "lossval/dataset.hpp"
#include "lossval/lossval.hpp"

namespace lossval::baselines {

enum class ModelKind { logistic_regression, linear_regression, mlp };

/// Model retrained by LOO and by the point removal/addition curves.
/// Linear models train full-batch, so the fit does not depend on row order.
struct EvaluatorSpec {
  ModelKind kind = ModelKind::logistic_regression;
  std::size_t epochs = 100;  // full-batch Adam steps for linear models
  std::uint64_t seed = 0;
  double lr = 0.05;
  MLPConfig mlp;  // ModelKind::mlp only, trained with default_config()

  static EvaluatorSpec for_task(TaskKind task, std::uint64_t seed = 0);
  void check_compatible(const Task& task) const;
};

struct FitScore {
  /// Accuracy (classification) or negative MSE (regression) on the eval set.
  double metric = 0.0;
  /// Training set was empty or held a single class; a constant predictor was used.
  bool degenerate = false;
};

FitScore fit_and_score(const Dataset& train, const Dataset& eval, const EvaluatorSpec& spec);

/// score_i = metric(train) - metric(train without i), all fits with one seed.
ValuationResult loo_valuation(const Dataset& train, const Dataset& val, const EvaluatorSpec& spec,
                              std::size_t jobs = 1);

/// Exact Shapley values of the K-nearest-neighbour utility, summed over
/// validation points. Regression uses the match 1[|y - y_val| <= tau],
/// tau = 0.1 * std(y_val).
ValuationResult knn_shapley(const Dataset& train, const Dataset& val, std::size_t k = 100);
double knn_regression_tolerance(const Dataset& val);

/// i.i.d. U(0, 1) scores.
ValuationResult random_valuation(std::size_t n, std::uint64_t seed);

}  // namespace lossval::baselines
