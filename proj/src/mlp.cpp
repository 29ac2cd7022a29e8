#include "lossval/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lossval/errors.hpp"

namespace lossval::nn {
namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative expressed through the pre-activation z.
double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

Matrix affine(const Layer& layer, const Matrix& x) {
  Matrix z = matmul_transposed(x, layer.weight);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return z;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t MLPParams::input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
std::size_t MLPParams::output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

std::size_t MLPParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MLPParams::validate() const {
  if (layers.empty()) throw ShapeError("MLP needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].out_dim()) {
      throw ShapeError("layer " + std::to_string(l) + ": bias length mismatch");
    }
    if (l > 0 && layers[l].in_dim() != layers[l - 1].out_dim()) {
      throw ShapeError("layer " + std::to_string(l) + ": input dim " +
                       std::to_string(layers[l].in_dim()) + " does not match previous output " +
                       std::to_string(layers[l - 1].out_dim()));
    }
  }
}

MLPParams init_mlp(std::span<const std::size_t> widths, Activation activation, Head head,
                   std::mt19937_64& rng) {
  if (widths.size() < 2) throw ShapeError("init_mlp needs at least input and output widths");
  MLPParams p;
  p.activation = activation;
  p.head = head;
  const std::size_t n_layers = widths.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    if (in == 0 || out == 0) throw ShapeError("init_mlp: zero-width layer");
    const bool hidden = l + 1 < n_layers;
    const double limit = hidden && activation == Activation::relu
                             ? std::sqrt(6.0 / static_cast<double>(in))
                             : std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& w : layer.weight.data()) w = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

ForwardResult mlp_forward(const MLPParams& params, const Matrix& x) {
  params.validate();
  if (x.cols() != params.input_dim()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(x.cols()) +
                     " columns, network expects " + std::to_string(params.input_dim()));
  }
  ForwardResult res;
  auto& tr = res.trace;
  tr.inputs.reserve(params.layers.size());
  tr.pre_activations.reserve(params.layers.size());
  Matrix h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix z = affine(params.layers[l], h);
    tr.inputs.push_back(std::move(h));
    if (l + 1 < params.layers.size()) {
      h = z;
      for (double& v : h.data()) v = activate(params.activation, v);
    } else {
      h = z;
      if (params.head == Head::softmax) softmax_rows(h);
    }
    tr.pre_activations.push_back(std::move(z));
  }
  tr.output = h;
  res.output = std::move(h);
  return res;
}

Matrix mlp_predict(const MLPParams& params, const Matrix& x) {
  params.validate();
  if (x.cols() != params.input_dim()) {
    throw ShapeError("mlp_predict: input has " + std::to_string(x.cols()) +
                     " columns, network expects " + std::to_string(params.input_dim()));
  }
  Matrix h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    h = affine(params.layers[l], h);
    if (l + 1 < params.layers.size()) {
      for (double& v : h.data()) v = activate(params.activation, v);
    } else if (params.head == Head::softmax) {
      softmax_rows(h);
    }
  }
  return h;
}

BackwardResult mlp_backward(const MLPParams& params, const ForwardTrace& trace,
                            const Matrix& grad_output) {
  if (trace.depth() != params.layers.size()) throw ShapeError("trace depth mismatch");
  const Matrix& out = trace.output;
  if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols()) {
    throw ShapeError("mlp_backward: grad_output is " + std::to_string(grad_output.rows()) + "x" +
                     std::to_string(grad_output.cols()) + ", output is " +
                     std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
  }
  const std::size_t batch = out.rows();

  // dz for the last layer.
  Matrix dz = grad_output;
  if (params.head == Head::softmax) {
    for (std::size_t r = 0; r < batch; ++r) {
      auto p = out.row(r);
      auto g = dz.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * g[c];
      for (std::size_t c = 0; c < p.size(); ++c) g[c] = p[c] * (g[c] - dot);
    }
  }

  BackwardResult res;
  res.grads.resize(params.layers.size());
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const Layer& layer = params.layers[li];
    const Matrix& in = trace.inputs[li];
    const std::size_t n_in = layer.in_dim();
    const std::size_t n_out = layer.out_dim();
    Layer& g = res.grads[li];
    g.weight = Matrix(n_out, n_in);
    g.bias.assign(n_out, 0.0);
    Matrix dx(batch, n_in);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* xb = in.row(b).data();
      double* dxb = dx.row(b).data();
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = dz(b, o);
        if (d == 0.0) continue;
        g.bias[o] += d;
        double* gw = g.weight.row(o).data();
        const double* w = layer.weight.row(o).data();
        for (std::size_t i = 0; i < n_in; ++i) {
          gw[i] += d * xb[i];
          dxb[i] += d * w[i];
        }
      }
    }
    if (li > 0) {
      const Matrix& z_prev = trace.pre_activations[li - 1];
      for (std::size_t k = 0; k < dx.size(); ++k) {
        dx.data()[k] *= activate_grad(params.activation, z_prev.data()[k]);
      }
    }
    dz = std::move(dx);
  }
  res.grad_input = std::move(dz);
  return res;
}

void pack(std::span<const Layer> layers, std::span<double> out) {
  std::size_t k = 0;
  for (const auto& l : layers) {
    if (k + l.weight.size() + l.bias.size() > out.size()) throw ShapeError("pack: buffer too small");
    std::copy(l.weight.data().begin(), l.weight.data().end(), out.begin() + k);
    k += l.weight.size();
    std::copy(l.bias.begin(), l.bias.end(), out.begin() + k);
    k += l.bias.size();
  }
  if (k != out.size()) throw ShapeError("pack: buffer size mismatch");
}

void pack(const MLPParams& params, std::span<double> out) { pack(params.layers, out); }

void unpack(std::span<const double> flat, MLPParams& params) {
  if (flat.size() != params.parameter_count()) throw ShapeError("unpack: size mismatch");
  std::size_t k = 0;
  for (auto& l : params.layers) {
    std::copy(flat.begin() + k, flat.begin() + k + l.weight.size(), l.weight.data().begin());
    k += l.weight.size();
    std::copy(flat.begin() + k, flat.begin() + k + l.bias.size(), l.bias.begin());
    k += l.bias.size();
  }
}

}  // namespace lossval::nn
