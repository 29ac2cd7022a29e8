#include "lossval/adam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lossval/errors.hpp"

namespace lossval::nn {

AdamState AdamState::create(std::size_t n, std::vector<ParamGroup> groups, AdamConfig config) {
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0) || !(config.beta2 > 0.0 && config.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  std::sort(groups.begin(), groups.end(),
            [](const ParamGroup& a, const ParamGroup& b) { return a.offset < b.offset; });
  std::size_t covered = 0;
  for (const auto& g : groups) {
    if (g.offset != covered) throw ConfigError("Adam parameter groups must tile the vector");
    if (!(g.lr >= 0.0) || !std::isfinite(g.lr)) throw ConfigError("Adam learning rate invalid");
    covered += g.size;
  }
  if (covered != n) throw ConfigError("Adam parameter groups must tile the vector");
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.config = config;
  s.groups = std::move(groups);
  return s;
}

AdamState AdamState::create(std::size_t n, double lr, AdamConfig config) {
  return create(n, {ParamGroup{0, n, lr}}, config);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: params " + std::to_string(params.size()) + ", grads " +
                     std::to_string(grads.size()) + ", state " + std::to_string(state.m.size()));
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient at parameter index " + std::to_string(i));
    }
  }
  const auto& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (const auto& g : state.groups) {
    for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
      state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
      state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
      const double m_hat = state.m[i] / corr1;
      const double v_hat = state.v[i] / corr2;
      params[i] -= g.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace lossval::nn
