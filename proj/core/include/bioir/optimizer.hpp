#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bioir/tensor.hpp"

namespace bioir {

struct OptimizerConfig {
  enum class Kind { adam, adagrad };
  Kind kind = Kind::adam;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2_lambda = 0.0;  // folded into the gradient as g + 2*lambda*w

  void validate() const;
};

/// Per-parameter moment buffers. The same parameter list (same order, same
/// shapes) must be passed to every step; buffers are allocated lazily on the
/// first call.
class OptimizerState {
 public:
  explicit OptimizerState(OptimizerConfig cfg);

  /// Applies one update (Adam or AdaGrad per the config) from the gradients
  /// currently stored in the parameters. Does not zero the gradients.
  void step(std::span<Parameter* const> params);

  const OptimizerConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_count_; }

 private:
  friend void adam_step(std::span<Parameter* const>, OptimizerState&);
  friend void adagrad_step(std::span<Parameter* const>, OptimizerState&);

  void ensure_buffers(std::span<Parameter* const> params);

  OptimizerConfig cfg_;
  std::int64_t step_count_ = 0;
  std::vector<Tensor> first_moment_;   // Adam m
  std::vector<Tensor> second_moment_;  // Adam v / AdaGrad accumulator
};

void adam_step(std::span<Parameter* const> params, OptimizerState& state);
void adagrad_step(std::span<Parameter* const> params, OptimizerState& state);

}  // namespace bioir
