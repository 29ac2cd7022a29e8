#include "lossval/metrics.hpp"

#include <algorithm>

#include "lossval/errors.hpp"

namespace lossval {

double accuracy(const Matrix& probs, std::span<const double> labels) {
  if (probs.rows() != labels.size()) throw ShapeError("accuracy: size mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    const auto best = static_cast<double>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double mean_squared_error(const Matrix& pred, std::span<const double> y) {
  if (pred.rows() != y.size() || pred.cols() != 1) throw ShapeError("mse: size mismatch");
  if (y.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - pred(i, 0)) * (y[i] - pred(i, 0));
  return s / static_cast<double>(y.size());
}

double r2_score(const Matrix& pred, std::span<const double> y) {
  if (pred.rows() != y.size() || pred.cols() != 1) throw ShapeError("r2: size mismatch");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - pred(i, 0)) * (y[i] - pred(i, 0));
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
}

}  // namespace lossval
