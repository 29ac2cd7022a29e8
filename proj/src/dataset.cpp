#include "lossval/dataset.hpp"

#include <cmath>
#include <string>

#include "lossval/errors.hpp"
#include "lossval/weighted_losses.hpp"

namespace lossval {

std::vector<int> Dataset::labels() const {
  if (!task.is_classification()) throw ConfigError("labels() on a regression dataset");
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<int>(y[i]);
  return out;
}

Matrix Dataset::target_matrix() const {
  if (task.is_classification()) return loss::one_hot(labels(), task.num_classes);
  return loss::target_column(y);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.X = select_rows(X, indices);
  out.y.reserve(indices.size());
  for (std::size_t i : indices) out.y.push_back(y.at(i));
  out.task = task;
  out.name = name;
  out.standardization = standardization;
  return out;
}

void Dataset::validate() const {
  if (y.size() != X.rows()) {
    throw ShapeError("dataset '" + name + "': " + std::to_string(X.rows()) + " rows but " +
                     std::to_string(y.size()) + " targets");
  }
  require_finite(X, "dataset features");
  require_finite(y, "dataset targets");
  if (task.is_classification()) {
    if (task.num_classes < 2) throw ConfigError("classification needs at least two classes");
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double v = y[i];
      if (v != std::floor(v) || v < 0 || v >= static_cast<double>(task.num_classes)) {
        throw ConfigError("dataset '" + name + "': label " + std::to_string(v) + " at row " +
                          std::to_string(i) + " is not a class index");
      }
    }
  }
}

}  // namespace lossval
