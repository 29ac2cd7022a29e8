#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lossval/matrix.hpp"

namespace lossval::ot {

/// C[n][j] = ||src_n - dst_j||^2.
Matrix cost_matrix(const Matrix& src, const Matrix& dst);

/// scale * mean(C); falls back to `scale` when C is identically zero.
double default_epsilon(const Matrix& cost, double scale = 0.05);

struct SinkhornOptions {
  double epsilon = 0.05;
  std::size_t max_iters = 200;
  /// Stop once the marginal violation drops to tol. tol = 0 runs exactly
  /// max_iters iterations (fixed unroll).
  double tol = 1e-6;
  bool record_history = false;
};

/// Entropic coupling between source marginal a and target marginal b.
/// Scalings are kept as log-domain potentials: u = exp(f / eps), v = exp(g / eps),
/// coupling = diag(u) exp(-C / eps) diag(v).
struct TransportPlan {
  Matrix coupling;
  std::vector<double> potential_src;  // f
  std::vector<double> potential_dst;  // g
  double epsilon = 0.0;
  std::size_t iterations = 0;
  double marginal_err = 0.0;  // max-norm violation over both marginals
  double cost = 0.0;          // <coupling, C>, entropy excluded
  bool converged = false;
  std::vector<double> err_history;  // marginal_err after each iteration
  /// Summed absolute violation after each iteration. Unlike the max-norm
  /// this never increases along the iterations.
  std::vector<double> l1_history;
};

/// Log-domain Sinkhorn. Non-convergence is reported through `converged`,
/// not thrown; NaN potentials throw NumericError.
TransportPlan sinkhorn(std::span<const double> a, std::span<const double> b, const Matrix& cost,
                       const SinkhornOptions& options);

std::vector<double> softmax(std::span<const double> logits);

struct OtGradient {
  TransportPlan plan;
  std::vector<double> grad_logits;  // d cost / d logits, with a = softmax(logits)
};

/// Sinkhorn with source marginal softmax(logits), differentiated in reverse
/// mode through every scaling iteration actually performed. The gradient is
/// exact for the unrolled computation.
OtGradient ot_grad_weights(std::span<const double> logits, std::span<const double> b,
                           const Matrix& cost, const SinkhornOptions& options);

}  // namespace lossval::ot
