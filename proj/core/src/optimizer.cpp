#include "bioir/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bioir {

void OptimizerConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("OptimizerConfig: learning_rate must be positive");
  if (epsilon <= 0.0) throw std::invalid_argument("OptimizerConfig: epsilon must be positive");
  if (l2_lambda < 0.0) throw std::invalid_argument("OptimizerConfig: l2_lambda must be non-negative");
  if (kind == Kind::adam && (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)) {
    throw std::invalid_argument("OptimizerConfig: betas must lie in [0, 1)");
  }
}

OptimizerState::OptimizerState(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void OptimizerState::ensure_buffers(std::span<Parameter* const> params) {
  if (first_moment_.empty()) {
    for (const Parameter* p : params) {
      first_moment_.emplace_back(p->value.shape());
      second_moment_.emplace_back(p->value.shape());
    }
    return;
  }
  if (first_moment_.size() != params.size()) {
    throw std::invalid_argument("OptimizerState: parameter count changed between steps (" +
                                std::to_string(first_moment_.size()) + " vs " +
                                std::to_string(params.size()) + ")");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!first_moment_[i].same_shape(params[i]->value)) {
      throw std::invalid_argument("OptimizerState: parameter shape changed between steps for " +
                                  params[i]->name);
    }
  }
}

void OptimizerState::step(std::span<Parameter* const> params) {
  if (cfg_.kind == OptimizerConfig::Kind::adam) {
    adam_step(params, *this);
  } else {
    adagrad_step(params, *this);
  }
}

void adam_step(std::span<Parameter* const> params, OptimizerState& state) {
  if (state.cfg_.kind != OptimizerConfig::Kind::adam) {
    throw std::invalid_argument("adam_step: optimizer state was configured for another kind");
  }
  state.ensure_buffers(params);
  state.step_count_ += 1;
  const auto& cfg = state.cfg_;
  const double t = static_cast<double>(state.step_count_);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable) continue;
    auto w = p.value.flat();
    auto g = p.grad.flat();
    auto m = state.first_moment_[i].flat();
    auto v = state.second_moment_[i].flat();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double grad = g[j] + 2.0 * cfg.l2_lambda * w[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad * grad;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      w[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void adagrad_step(std::span<Parameter* const> params, OptimizerState& state) {
  if (state.cfg_.kind != OptimizerConfig::Kind::adagrad) {
    throw std::invalid_argument("adagrad_step: optimizer state was configured for another kind");
  }
  state.ensure_buffers(params);
  state.step_count_ += 1;
  const auto& cfg = state.cfg_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable) continue;
    auto w = p.value.flat();
    auto g = p.grad.flat();
    auto acc = state.second_moment_[i].flat();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double grad = g[j] + 2.0 * cfg.l2_lambda * w[j];
      acc[j] += grad * grad;
      w[j] -= cfg.learning_rate * grad / (std::sqrt(acc[j]) + cfg.epsilon);
    }
  }
}

}  // namespace bioir
