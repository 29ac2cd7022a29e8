#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lossval::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Contiguous slice of the flat parameter vector sharing a learning rate.
struct ParamGroup {
  std::size_t offset = 0;
  std::size_t size = 0;
  double lr = 1e-3;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  AdamConfig config;
  std::vector<ParamGroup> groups;

  /// Groups must tile [0, n) without overlap.
  static AdamState create(std::size_t n, std::vector<ParamGroup> groups, AdamConfig config = {});
  static AdamState create(std::size_t n, double lr, AdamConfig config = {});
};

/// One bias-corrected Adam update in place. Gradients are checked before any
/// state changes; a non-finite entry throws NumericError with its index.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace lossval::nn
