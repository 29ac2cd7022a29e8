#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "lossval/matrix.hpp"

namespace lossval::nn {

enum class Activation { relu, tanh, sigmoid };
enum class Head { softmax, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct Layer {
  Matrix weight;  // [out x in]
  std::vector<double> bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
};

/// Fully connected network. Hidden layers use `activation`; the last layer
/// feeds `head`. A single layer is plain linear/logistic regression.
struct MLPParams {
  std::vector<Layer> layers;
  Activation activation = Activation::relu;
  Head head = Head::identity;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  /// Throws ShapeError unless layer dimensions chain.
  void validate() const;
};

/// Cached per-layer values needed by the backward pass.
struct ForwardTrace {
  std::vector<Matrix> inputs;           // inputs[l] feeds layer l
  std::vector<Matrix> pre_activations;  // z_l = inputs[l] * W_l^T + b_l
  Matrix output;                        // head(z_last)

  std::size_t depth() const noexcept { return pre_activations.size(); }
};

struct ForwardResult {
  Matrix output;
  ForwardTrace trace;
};

struct BackwardResult {
  std::vector<Layer> grads;  // same shapes as MLPParams::layers
  Matrix grad_input;
};

/// `widths` = {in, hidden..., out}. He-uniform for ReLU hidden layers,
/// Xavier-uniform otherwise; biases start at zero.
MLPParams init_mlp(std::span<const std::size_t> widths, Activation activation, Head head,
                   std::mt19937_64& rng);

ForwardResult mlp_forward(const MLPParams& params, const Matrix& x);
Matrix mlp_predict(const MLPParams& params, const Matrix& x);

/// Reverse-mode pass for a scalar whose gradient w.r.t. the network output is
/// `grad_output`.
BackwardResult mlp_backward(const MLPParams& params, const ForwardTrace& trace,
                            const Matrix& grad_output);

/// Flat parameter layout: for each layer, weight (row-major) then bias.
void pack(const MLPParams& params, std::span<double> out);
void pack(std::span<const Layer> layers, std::span<double> out);
void unpack(std::span<const double> flat, MLPParams& params);

}  // namespace lossval::nn
