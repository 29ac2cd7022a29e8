#include "lossval/weighted_losses.hpp"

#include <cmath>
#include <string>

#include "lossval/errors.hpp"

namespace lossval::loss {
namespace {

void check_shapes(const Matrix& pred, const Matrix& targets, std::span<const double> weights,
                  const char* what) {
  if (pred.rows() != targets.rows() || pred.cols() != targets.cols()) {
    throw ShapeError(std::string(what) + ": predictions " + std::to_string(pred.rows()) + "x" +
                     std::to_string(pred.cols()) + " vs targets " +
                     std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()));
  }
  if (weights.size() != pred.rows()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(weights.size()) +
                     " weights for a batch of " + std::to_string(pred.rows()));
  }
}

double instance_ce(std::span<const double> p, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (y[k] != 0.0) s -= y[k] * std::log(std::max(p[k], kLogClamp));
  }
  return s;
}

}  // namespace

Matrix one_hot(std::span<const int> labels, std::size_t num_classes) {
  if (num_classes < 2) throw ShapeError("one_hot: need at least two classes");
  Matrix m(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ShapeError("one_hot: label " + std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    m(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return m;
}

Matrix target_column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

double weighted_cross_entropy(const Matrix& pred, const Matrix& targets,
                              std::span<const double> weights) {
  check_shapes(pred, targets, weights, "weighted_cross_entropy");
  double total = 0.0;
  for (std::size_t n = 0; n < pred.rows(); ++n) {
    total += weights[n] * instance_ce(pred.row(n), targets.row(n));
  }
  return total;
}

double weighted_mse(const Matrix& pred, const Matrix& targets, std::span<const double> weights) {
  check_shapes(pred, targets, weights, "weighted_mse");
  if (pred.cols() != 1) throw ShapeError("weighted_mse: expected a single output column");
  double total = 0.0;
  for (std::size_t n = 0; n < pred.rows(); ++n) {
    const double r = targets(n, 0) - pred(n, 0);
    total += weights[n] * r * r;
  }
  return total;
}

std::vector<double> per_instance_losses(LossKind kind, const Matrix& pred, const Matrix& targets) {
  std::vector<double> ones(pred.rows(), 1.0);
  check_shapes(pred, targets, ones, "per_instance_losses");
  std::vector<double> out(pred.rows());
  for (std::size_t n = 0; n < pred.rows(); ++n) {
    if (kind == LossKind::cross_entropy) {
      out[n] = instance_ce(pred.row(n), targets.row(n));
    } else {
      const double r = targets(n, 0) - pred(n, 0);
      out[n] = r * r;
    }
  }
  return out;
}

LossGrads loss_grads(LossKind kind, const Matrix& pred, const Matrix& targets,
                     std::span<const double> weights) {
  check_shapes(pred, targets, weights, "loss_grads");
  if (kind == LossKind::squared_error && pred.cols() != 1) {
    throw ShapeError("loss_grads: squared error expects a single output column");
  }
  LossGrads g;
  g.grad_w = per_instance_losses(kind, pred, targets);
  g.grad_pred = Matrix(pred.rows(), pred.cols());
  for (std::size_t n = 0; n < pred.rows(); ++n) {
    g.value += weights[n] * g.grad_w[n];
    if (kind == LossKind::cross_entropy) {
      for (std::size_t k = 0; k < pred.cols(); ++k) {
        const double p = pred(n, k);
        const double y = targets(n, k);
        if (y != 0.0 && p > kLogClamp) g.grad_pred(n, k) = -weights[n] * y / p;
      }
    } else {
      g.grad_pred(n, 0) = -2.0 * weights[n] * (targets(n, 0) - pred(n, 0));
    }
  }
  return g;
}

}  // namespace lossval::loss
