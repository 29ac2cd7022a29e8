#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lossval/dataset.hpp"

namespace lossval::data {

/// Reads a headed, comma-separated numeric table. Every column except
/// `label_column` becomes a feature. Classification labels must be integral;
/// their sorted distinct values are mapped to 0..K-1.
Dataset load_csv(const std::filesystem::path& path, std::string_view label_column, TaskKind task);

/// Writes features as x0..x{d-1} plus `label_column`, shortest round-trip
/// formatting. load_csv(save_csv(d)) == d for datasets with dense labels.
void save_csv(const Dataset& dataset, const std::filesystem::path& path,
              std::string_view label_column = "label");

/// Gaussian clusters with unit covariance. For K <= d the centers sit on
/// scaled coordinate axes, pairwise `separation` apart; otherwise on a
/// regular polygon with adjacent centers `separation` apart.
Dataset synth_blobs(std::size_t n, std::size_t dim, std::size_t classes, double separation,
                    std::uint64_t seed);

/// y = 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4 + noise * N(0, 1),
/// x ~ U[0, 1]^dim, dim >= 5.
Dataset synth_friedman1(std::size_t n, double noise, std::uint64_t seed, std::size_t dim = 10);
double friedman1_target(std::span<const double> x);

struct SplitSpec {
  std::size_t train = 1000;
  std::size_t val = 100;
  std::size_t test = 3000;
  std::uint64_t seed = 0;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Shuffles, splits, and standardizes every split with train statistics.
/// Regression targets are standardized the same way.
Splits split_standardize(const Dataset& dataset, const SplitSpec& spec);

}  // namespace lossval::data
