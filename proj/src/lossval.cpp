#include "lossval/lossval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lossval/errors.hpp"
#include "lossval/format.hpp"
#include "lossval/metrics.hpp"
#include "lossval/sinkhorn.hpp"

namespace lossval {
namespace {

constexpr std::array<Variant, 7> kVariants = {
    Variant::ot_only,  Variant::ot_square_only,  Variant::target_only, Variant::additive,
    Variant::additive_square, Variant::mult_no_square, Variant::lossval,
};

// Partial derivatives of the combined value w.r.t. (L, OT).
struct Combination {
  double value;
  double d_target;
  double d_ot;
};

Combination combine(Variant v, double l, double ot) {
  switch (v) {
    case Variant::ot_only:
      return {ot, 0.0, 1.0};
    case Variant::ot_square_only:
      return {ot * ot, 0.0, 2.0 * ot};
    case Variant::target_only:
      return {l, 1.0, 0.0};
    case Variant::additive:
      return {l + ot, 1.0, 1.0};
    case Variant::additive_square:
      return {l + ot * ot, 1.0, 2.0 * ot};
    case Variant::mult_no_square:
      return {l * ot, ot, l};
    case Variant::lossval:
      return {l * ot * ot, ot * ot, 2.0 * l * ot};
  }
  return {0.0, 0.0, 0.0};
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

nn::MLPParams init_network(const Dataset& train, const MLPConfig& mlp, std::uint64_t seed) {
  std::vector<std::size_t> widths{train.dim()};
  widths.insert(widths.end(), mlp.hidden.begin(), mlp.hidden.end());
  const bool cls = train.task.is_classification();
  widths.push_back(cls ? train.task.num_classes : 1);
  auto rng = stream(seed, 0);
  return nn::init_mlp(widths, mlp.activation, cls ? nn::Head::softmax : nn::Head::identity, rng);
}

loss::LossKind loss_kind(const Dataset& d) {
  return d.task.is_classification() ? loss::LossKind::cross_entropy
                                    : loss::LossKind::squared_error;
}

void check_pair(const Dataset& train, const Dataset& val) {
  train.validate();
  val.validate();
  if (train.size() == 0) throw ConfigError("empty training set");
  if (val.size() == 0) throw ConfigError("empty validation set");
  if (train.dim() != val.dim()) {
    throw ShapeError("train has " + std::to_string(train.dim()) + " features, validation has " +
                     std::to_string(val.dim()));
  }
  if (!(train.task == val.task)) throw ConfigError("train and validation tasks differ");
}

// Minibatch index lists for one epoch.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch,
                                                    std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::ot_only:
      return "ot_only";
    case Variant::ot_square_only:
      return "ot_square_only";
    case Variant::target_only:
      return "target_only";
    case Variant::additive:
      return "additive";
    case Variant::additive_square:
      return "additive_square";
    case Variant::mult_no_square:
      return "mult_no_square";
    case Variant::lossval:
      return "lossval";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kVariants) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown LossVal variant '" + std::string(name) + "'");
}

std::span<const Variant> all_variants() { return kVariants; }

bool uses_target_loss(Variant v) {
  return v != Variant::ot_only && v != Variant::ot_square_only;
}

bool uses_transport(Variant v) { return v != Variant::target_only; }

std::string_view to_string(TargetReduction r) { return r == TargetReduction::sum ? "sum" : "mean"; }

TargetReduction parse_reduction(std::string_view name) {
  if (name == "sum") return TargetReduction::sum;
  if (name == "mean") return TargetReduction::mean;
  throw ConfigError("unknown target reduction '" + std::string(name) + "'");
}

std::vector<double> effective_weights(std::span<const double> logits) {
  require_finite(logits, "weight logits");
  std::vector<double> w(logits.size());
  if (logits.empty()) return w;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(logits[i] - mx);
    sum += w[i];
  }
  const double n = static_cast<double>(logits.size());
  for (double& v : w) v = (n * v) / sum;
  return w;
}

ObjectiveResult evaluate_objective(Variant variant, loss::LossKind kind, const Matrix& pred,
                                   const Matrix& targets, const Matrix& batch_features,
                                   const Matrix& val_features, std::span<const double> batch_logits,
                                   const OtSettings& ot, TargetReduction reduction) {
  const std::size_t b = pred.rows();
  if (b == 0) throw ShapeError("evaluate_objective: empty batch");
  if (val_features.rows() == 0) throw ShapeError("evaluate_objective: empty validation set");
  if (batch_logits.size() != b || batch_features.rows() != b) {
    throw ShapeError("evaluate_objective: batch of " + std::to_string(b) + " predictions with " +
                     std::to_string(batch_logits.size()) + " logits and " +
                     std::to_string(batch_features.rows()) + " feature rows");
  }

  const auto w = effective_weights(batch_logits);
  auto lg = loss::loss_grads(kind, pred, targets, w);

  ObjectiveResult res;
  if (reduction == TargetReduction::mean) {
    const double inv_b = 1.0 / static_cast<double>(b);
    lg.value *= inv_b;
    for (double& v : lg.grad_w) v *= inv_b;
    for (double& v : lg.grad_pred.data()) v *= inv_b;
  }
  res.target_loss = lg.value;

  std::vector<double> ot_grad(b, 0.0);
  if (uses_transport(variant)) {
    const Matrix cost = ot::cost_matrix(batch_features, val_features);
    ot::SinkhornOptions so;
    so.epsilon = ot.epsilon > 0.0 ? ot.epsilon : ot::default_epsilon(cost, ot.epsilon_scale);
    so.max_iters = ot.unroll;
    so.tol = ot.tol;
    const std::vector<double> uniform(val_features.rows(),
                                      1.0 / static_cast<double>(val_features.rows()));
    auto og = ot::ot_grad_weights(batch_logits, uniform, cost, so);
    res.ot = og.plan.cost;
    res.sinkhorn_iterations = og.plan.iterations;
    res.sinkhorn_converged = og.plan.converged;
    ot_grad = std::move(og.grad_logits);
  }

  const Combination c = combine(variant, res.target_loss, res.ot);
  res.value = c.value;

  // d L / d logit_k = w_k (l_k - sum_n a_n l_n), a = w / B
  double mean_loss = 0.0;
  for (std::size_t n = 0; n < b; ++n) mean_loss += w[n] * lg.grad_w[n];
  mean_loss /= static_cast<double>(b);

  res.grad_logits.resize(b);
  for (std::size_t k = 0; k < b; ++k) {
    const double dl = w[k] * (lg.grad_w[k] - mean_loss);
    res.grad_logits[k] = c.d_target * dl + c.d_ot * ot_grad[k];
  }
  res.grad_pred = std::move(lg.grad_pred);
  if (c.d_target != 1.0) {
    for (double& g : res.grad_pred.data()) g *= c.d_target;
  }
  return res;
}

double lossval_objective(Variant variant, loss::LossKind kind, const Matrix& pred,
                         const Matrix& targets, const Matrix& batch_features,
                         const Matrix& val_features, std::span<const double> batch_logits,
                         const OtSettings& ot, TargetReduction reduction) {
  return evaluate_objective(variant, kind, pred, targets, batch_features, val_features,
                            batch_logits, ot, reduction)
      .value;
}

std::vector<double> lossval_grad_weights(Variant variant, loss::LossKind kind, const Matrix& pred,
                                         const Matrix& targets, const Matrix& batch_features,
                                         const Matrix& val_features,
                                         std::span<const double> batch_logits,
                                         const OtSettings& ot, TargetReduction reduction) {
  return evaluate_objective(variant, kind, pred, targets, batch_features, val_features,
                            batch_logits, ot, reduction)
      .grad_logits;
}

void LossValConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(lr_model > 0.0) || !(lr_weights > 0.0)) throw ConfigError("learning rates must be > 0");
  if (ot.unroll < 1) throw ConfigError("sinkhorn unroll must be at least 1");
  if (!(ot.epsilon_scale > 0.0) && !(ot.epsilon > 0.0)) {
    throw ConfigError("sinkhorn epsilon must be positive");
  }
}

std::map<std::string, std::string> LossValConfig::snapshot() const {
  return {
      {"variant", std::string(to_string(variant))},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"lr_model", format_double(lr_model)},
      {"lr_weights", format_double(lr_weights)},
      {"ot_epsilon_scale", format_double(ot.epsilon_scale)},
      {"ot_epsilon", format_double(ot.epsilon)},
      {"ot_unroll", std::to_string(ot.unroll)},
      {"ot_tol", format_double(ot.tol)},
      {"seed", std::to_string(seed)},
      {"freeze_weights", freeze_weights ? "true" : "false"},
      {"target_reduction", std::string(to_string(target_reduction))},
  };
}

MLPConfig default_mlp(TaskKind task) {
  if (task == TaskKind::classification) {
    return {std::vector<std::size_t>(5, 100), nn::Activation::relu};
  }
  return {std::vector<std::size_t>(3, 90), nn::Activation::tanh};
}

LossValConfig default_config(TaskKind task, std::size_t epochs) {
  LossValConfig c;
  c.epochs = epochs;
  if (task == TaskKind::classification) {
    c.batch_size = 128;
    c.lr_model = 0.01;
  } else {
    c.batch_size = 32;
    c.lr_model = 0.01;
  }
  c.lr_weights = 0.01;
  return c;
}

TrainOutcome train_with_lossval(const Dataset& train, const Dataset& val, const MLPConfig& mlp,
                                const LossValConfig& config, const EpochObserver& observer) {
  config.validate();
  check_pair(train, val);
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = train.size();
  const auto kind = loss_kind(train);

  ModelState state;
  state.params = init_network(train, mlp, config.seed);
  state.logits.assign(n, 0.0);
  const std::size_t n_model = state.params.parameter_count();
  state.adam = nn::AdamState::create(
      n_model + n, {{0, n_model, config.lr_model}, {n_model, n, config.lr_weights}});

  const Matrix targets = train.target_matrix();
  std::vector<double> flat(n_model + n);
  std::vector<double> grads(n_model + n);
  auto shuffle_rng = stream(config.seed, 1);

  if (observer) observer(0, effective_weights(state.logits));
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = epoch_batches(n, config.batch_size, shuffle_rng);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& idx = batches[bi];
      const Matrix xb = select_rows(train.X, idx);
      const Matrix yb = select_rows(targets, idx);
      std::vector<double> lb(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) lb[k] = state.logits[idx[k]];

      const auto fwd = nn::mlp_forward(state.params, xb);
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi);
      ObjectiveResult obj;
      try {
        obj = evaluate_objective(config.variant, kind, fwd.output, yb, xb, val.X, lb, config.ot,
                                 config.target_reduction);
      } catch (const NumericError& e) {
        throw NumericError("LossVal objective failed at " + where + ": " + e.what());
      }
      if (!std::isfinite(obj.value)) throw NumericError("non-finite LossVal objective at " + where);
      std::fill(grads.begin(), grads.end(), 0.0);
      if (uses_target_loss(config.variant)) {
        const auto bwd = nn::mlp_backward(state.params, fwd.trace, obj.grad_pred);
        nn::pack(bwd.grads, std::span<double>(grads).first(n_model));
      }
      if (!config.freeze_weights) {
        for (std::size_t k = 0; k < idx.size(); ++k) grads[n_model + idx[k]] = obj.grad_logits[k];
      }

      nn::pack(state.params, std::span<double>(flat).first(n_model));
      std::copy(state.logits.begin(), state.logits.end(), flat.begin() + n_model);
      nn::adam_step(flat, grads, state.adam);
      nn::unpack(std::span<const double>(flat).first(n_model), state.params);
      std::copy(flat.begin() + n_model, flat.end(), state.logits.begin());
    }
    if (observer) observer(epoch, effective_weights(state.logits));
  }

  TrainOutcome out;
  out.valuation.scores = effective_weights(state.logits);
  out.valuation.method = config.variant == Variant::lossval
                             ? "lossval"
                             : "lossval:" + std::string(to_string(config.variant));
  out.valuation.config = config.snapshot();
  out.valuation.seed = config.seed;
  out.valuation.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.model = std::move(state);
  return out;
}

nn::MLPParams train_plain(const Dataset& train, const MLPConfig& mlp, const LossValConfig& config) {
  config.validate();
  train.validate();
  const std::size_t n = train.size();
  const auto kind = loss_kind(train);
  nn::MLPParams params = init_network(train, mlp, config.seed);
  const std::size_t n_model = params.parameter_count();
  auto adam = nn::AdamState::create(n_model, config.lr_model);
  const Matrix targets = train.target_matrix();
  std::vector<double> flat(n_model);
  std::vector<double> grads(n_model);
  auto shuffle_rng = stream(config.seed, 1);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (const auto& idx : epoch_batches(n, config.batch_size, shuffle_rng)) {
      const Matrix xb = select_rows(train.X, idx);
      const Matrix yb = select_rows(targets, idx);
      const std::vector<double> ones(idx.size(), 1.0);
      const auto fwd = nn::mlp_forward(params, xb);
      auto lg = loss::loss_grads(kind, fwd.output, yb, ones);
      if (config.target_reduction == TargetReduction::mean) {
        const double inv_b = 1.0 / static_cast<double>(idx.size());
        lg.value *= inv_b;
        for (double& v : lg.grad_pred.data()) v *= inv_b;
      }
      if (!std::isfinite(lg.value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      const auto bwd = nn::mlp_backward(params, fwd.trace, lg.grad_pred);
      nn::pack(bwd.grads, grads);
      nn::pack(params, flat);
      nn::adam_step(flat, grads, adam);
      nn::unpack(flat, params);
    }
  }
  return params;
}

double test_metric(const nn::MLPParams& params, const Dataset& test) {
  const Matrix pred = nn::mlp_predict(params, test.X);
  return test.task.is_classification() ? accuracy(pred, test.y) : r2_score(pred, test.y);
}

ParityResult downstream_parity(const Dataset& train, const Dataset& val, const Dataset& test,
                               const MLPConfig& mlp, const LossValConfig& config) {
  LossValConfig lv = config;
  lv.variant = Variant::lossval;
  ParityResult r;
  r.plain = test_metric(train_plain(train, mlp, config), test);
  r.lossval = test_metric(train_with_lossval(train, val, mlp, lv).model.params, test);
  return r;
}

}  // namespace lossval
