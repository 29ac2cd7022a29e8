#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lossval/adam.hpp"
#include "lossval/dataset.hpp"
#include "lossval/matrix.hpp"
#include "lossval/mlp.hpp"
#include "lossval/weighted_losses.hpp"

namespace lossval {

/// How the instance-weighted target loss L and the weighted transport
/// distance OT are combined.
enum class Variant {
  ot_only,          // OT
  ot_square_only,   // OT^2
  target_only,      // L
  additive,         // L + OT
  additive_square,  // L + OT^2
  mult_no_square,   // L * OT
  lossval,          // L * OT^2
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
/// The seven ablation rows, simplest first, LossVal last.
std::span<const Variant> all_variants();
bool uses_target_loss(Variant v);
bool uses_transport(Variant v);

/// Scale of the target term inside the objective. `sum` is the literal
/// sum_n w_n l_n; `mean` divides it by the batch size. Multiplicative variants
/// differ only by a constant factor; additive ones change their balance
/// between L and OT.
enum class TargetReduction { sum, mean };

std::string_view to_string(TargetReduction r);
TargetReduction parse_reduction(std::string_view name);

struct OtSettings {
  double epsilon_scale = 0.05;  // epsilon = scale * mean(C) unless `epsilon` > 0
  double epsilon = 0.0;
  std::size_t unroll = 200;
  double tol = 1e-6;
};

/// n * softmax(logits), computed so that equal logits give weights of exactly 1.
std::vector<double> effective_weights(std::span<const double> logits);

struct ObjectiveResult {
  double value = 0.0;
  double target_loss = 0.0;
  double ot = 0.0;             // <coupling, C>; zero when the variant skips transport
  Matrix grad_pred;            // d value / d predictions
  std::vector<double> grad_logits;  // d value / d batch logits
  std::size_t sinkhorn_iterations = 0;
  bool sinkhorn_converged = true;
};

/// Evaluates one variant on a batch. The batch weights are
/// w = B * softmax(batch_logits); the transport source marginal is
/// softmax(batch_logits) against a uniform marginal on `val_features`.
ObjectiveResult evaluate_objective(Variant variant, loss::LossKind kind, const Matrix& pred,
                                   const Matrix& targets, const Matrix& batch_features,
                                   const Matrix& val_features, std::span<const double> batch_logits,
                                   const OtSettings& ot,
                                   TargetReduction reduction = TargetReduction::mean);

double lossval_objective(Variant variant, loss::LossKind kind, const Matrix& pred,
                         const Matrix& targets, const Matrix& batch_features,
                         const Matrix& val_features, std::span<const double> batch_logits,
                         const OtSettings& ot, TargetReduction reduction = TargetReduction::mean);

std::vector<double> lossval_grad_weights(Variant variant, loss::LossKind kind, const Matrix& pred,
                                         const Matrix& targets, const Matrix& batch_features,
                                         const Matrix& val_features,
                                         std::span<const double> batch_logits,
                                         const OtSettings& ot,
                                         TargetReduction reduction = TargetReduction::mean);

struct MLPConfig {
  std::vector<std::size_t> hidden;
  nn::Activation activation = nn::Activation::relu;
};

struct LossValConfig {
  Variant variant = Variant::lossval;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double lr_model = 0.01;
  double lr_weights = 0.01;
  OtSettings ot;
  TargetReduction target_reduction = TargetReduction::mean;
  std::uint64_t seed = 0;
  /// Keep every weight at exactly 1 (logits never updated).
  bool freeze_weights = false;

  void validate() const;
  std::map<std::string, std::string> snapshot() const;
};

/// Tuned MLP setups: 5 x 100 ReLU, lr 0.01, batch 128 for classification;
/// 3 x 90 tanh, lr 0.01, batch 32 for regression.
MLPConfig default_mlp(TaskKind task);
LossValConfig default_config(TaskKind task, std::size_t epochs = 30);

struct ModelState {
  nn::MLPParams params;
  nn::AdamState adam;
  std::vector<double> logits;  // raw weight parameters, one per training instance
};

struct ValuationResult {
  std::vector<double> scores;
  std::string method;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::size_t> flagged;  // instances with a diagnostic
  std::vector<std::string> notes;    // warnings raised while scoring
};

struct TrainOutcome {
  ValuationResult valuation;
  ModelState model;
};

/// Called with epoch 0 before any update and after every epoch.
using EpochObserver = std::function<void(std::size_t epoch, std::span<const double> scores)>;

/// Jointly trains the network and the per-instance logits with one Adam
/// instance (model lr group, weight lr group). Scores are the final
/// N * softmax(logits).
TrainOutcome train_with_lossval(const Dataset& train, const Dataset& val, const MLPConfig& mlp,
                                const LossValConfig& config, const EpochObserver& observer = {});

/// Standard unweighted training with the same initialization and batch order.
nn::MLPParams train_plain(const Dataset& train, const MLPConfig& mlp, const LossValConfig& config);

/// Test accuracy (classification) or R^2 (regression).
double test_metric(const nn::MLPParams& params, const Dataset& test);

struct ParityResult {
  double plain = 0.0;
  double lossval = 0.0;
};

ParityResult downstream_parity(const Dataset& train, const Dataset& val, const Dataset& test,
                               const MLPConfig& mlp, const LossValConfig& config);

}  // namespace lossval
