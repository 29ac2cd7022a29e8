#pragma once

#include <span>

#include "lossval/matrix.hpp"

namespace lossval {

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Matrix& probs, std::span<const double> labels);
double mean_squared_error(const Matrix& pred, std::span<const double> y);
double r2_score(const Matrix& pred, std::span<const double> y);

}  // namespace lossval
