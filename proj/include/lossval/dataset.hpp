#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lossval/matrix.hpp"

namespace lossval {

enum class TaskKind { classification, regression };

struct Task {
  TaskKind kind = TaskKind::classification;
  std::size_t num_classes = 0;  // classification only

  static Task classification(std::size_t k) { return {TaskKind::classification, k}; }
  static Task regression() { return {TaskKind::regression, 0}; }
  bool is_classification() const noexcept { return kind == TaskKind::classification; }
  friend bool operator==(const Task&, const Task&) = default;
};

/// Train-fit statistics applied to every split.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;
  double target_mean = 0.0;  // regression targets only
  double target_std = 1.0;
  friend bool operator==(const Standardization&, const Standardization&) = default;
};

/// Feature matrix plus targets. Classification targets are class indices
/// 0..K-1 stored as doubles.
struct Dataset {
  Matrix X;
  std::vector<double> y;
  Task task;
  std::string name;
  std::optional<Standardization> standardization;

  std::size_t size() const noexcept { return X.rows(); }
  std::size_t dim() const noexcept { return X.cols(); }

  std::vector<int> labels() const;
  /// One-hot [N x K] for classification, [N x 1] for regression.
  Matrix target_matrix() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Throws ShapeError/NumericError/ConfigError on a broken invariant.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace lossval
