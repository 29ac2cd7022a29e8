#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lossval/matrix.hpp"

namespace lossval::loss {

enum class LossKind { cross_entropy, squared_error };

/// Probabilities below this are clamped inside the log.
inline constexpr double kLogClamp = 1e-12;

/// One-hot [n x K] for classification, [n x 1] column for regression.
Matrix one_hot(std::span<const int> labels, std::size_t num_classes);
Matrix target_column(std::span<const double> values);

/// -sum_n w_n sum_k y_nk log(max(p_nk, 1e-12)).
double weighted_cross_entropy(const Matrix& pred, const Matrix& targets,
                              std::span<const double> weights);

/// sum_n w_n (y_n - p_n)^2. Summed, not averaged.
double weighted_mse(const Matrix& pred, const Matrix& targets, std::span<const double> weights);

/// Unweighted loss of every instance; this is also d(L_w)/d(w).
std::vector<double> per_instance_losses(LossKind kind, const Matrix& pred, const Matrix& targets);

struct LossGrads {
  double value = 0.0;
  Matrix grad_pred;             // d(L_w)/d(pred), w-scaled
  std::vector<double> grad_w;   // per-instance unweighted losses
};

LossGrads loss_grads(LossKind kind, const Matrix& pred, const Matrix& targets,
                     std::span<const double> weights);

}  // namespace lossval::loss
