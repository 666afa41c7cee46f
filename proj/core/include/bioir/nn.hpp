#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bioir/rng.hpp"
#include "bioir/tensor.hpp"

namespace bioir {

enum class Activation { relu, leaky_relu, linear, sigmoid };

inline constexpr double kLeakySlope = 0.01;

double apply_activation(Activation act, double x);
double activation_grad(Activation act, double pre);
double sigmoid(double x);

// ---------------------------------------------------------------------------
// Dense layer
// ---------------------------------------------------------------------------

struct DenseTrace {
  Tensor input;
  Tensor pre;  // W x + b, before the activation
  Activation act = Activation::linear;
};

/// y = act(W x + b) for a rank-1 x. W is [rows x cols] with cols == len(x),
/// b is [rows]. Throws std::invalid_argument naming the offending shapes.
Tensor dense_forward(const Tensor& x, const Parameter& W, const Parameter& b,
                     Activation act, DenseTrace* trace = nullptr);

/// Accumulates dL/dW and dL/db into the parameter grads; returns dL/dx.
Tensor dense_backward(const Tensor& d_out, const DenseTrace& trace,
                      Parameter& W, Parameter& b);

// ---------------------------------------------------------------------------
// 2-D convolution (valid mode) and poolings
// ---------------------------------------------------------------------------

struct Conv2dTrace {
  Tensor input;
};

/// Valid-mode cross-correlation of a 2-D input with F square kernels
/// (filters shaped [F, n, n]); output is [F, rows-n+1, cols-n+1].
Tensor conv2d_valid(const Tensor& input, const Parameter& filters,
                    Conv2dTrace* trace = nullptr);

/// Accumulates filter gradients for a conv2d_valid call.
void conv2d_backward(const Tensor& d_maps, const Conv2dTrace& trace, Parameter& filters);

struct MaxFilterTrace {
  std::vector<std::size_t> argmax;  // per output cell, winning filter (lowest index on ties)
  std::size_t rows = 0, cols = 0, n_filters = 0;
};

/// Elementwise max across the F maps of a [F, R, C] tensor -> [R, C].
Tensor max_over_filters(const Tensor& maps, MaxFilterTrace* trace = nullptr);

/// Routes each cell's upstream gradient to the winning filter only.
Tensor max_over_filters_backward(const Tensor& d_out, const MaxFilterTrace& trace);

/// The k largest values in descending order, ties broken by lower original
/// index. If the row has fewer than k entries the result is padded with 0.
/// `picked` (optional) receives the selected source indices in output order.
std::vector<double> kmax_pool(std::span<const double> row, std::size_t k,
                              std::vector<std::size_t>* picked = nullptr);

/// Sliding mean over the time axis of a [L x D] sequence with window w and
/// stride 1 -> [L-w+1 x D]. Composed after a wide convolution (which emits
/// length T+w-1) this restores the original sequence length T.
Tensor windowed_avg_pool(const Tensor& seq, std::size_t w);

/// Gradient of windowed_avg_pool w.r.t. its input of length in_len.
Tensor windowed_avg_pool_backward(const Tensor& d_out, std::size_t in_len, std::size_t w);

// ---------------------------------------------------------------------------
// Softmax and pairwise losses
// ---------------------------------------------------------------------------

/// Max-stabilized softmax over the positions with active[i] != 0; inactive
/// positions output exactly 0. Throws std::invalid_argument when every
/// position is masked.
std::vector<double> masked_softmax(std::span<const double> scores,
                                   std::span<const std::uint8_t> active);

/// dL/dscores given the softmax outputs and dL/dprobs.
std::vector<double> masked_softmax_backward(std::span<const double> probs,
                                            std::span<const double> d_probs,
                                            std::span<const std::uint8_t> active);

struct PairGrad {
  double d_pos = 0.0;
  double d_neg = 0.0;
};

/// max(0, margin - s_pos + s_neg); subgradient 0 when the pair is inactive.
double hinge_pair_loss(double s_pos, double s_neg, double margin);
PairGrad hinge_pair_grad(double s_pos, double s_neg, double margin);

/// -ln sigmoid(s_pos) - ln(1 - sigmoid(s_neg)) over pre-sigmoid logits.
/// Sigmoid outputs are clamped to [1e-12, 1-1e-12] before the logs.
double binary_log_pair_loss(double s_pos, double s_neg);
PairGrad binary_log_pair_grad(double s_pos, double s_neg);

// ---------------------------------------------------------------------------
// MLP scoring head: n_hidden equal-width hidden layers + linear scalar output
// ---------------------------------------------------------------------------

struct Mlp {
  std::vector<Parameter> weights;  // hidden layers then the output layer
  std::vector<Parameter> biases;
  Activation act = Activation::relu;

  static Mlp make(const std::string& name_prefix, std::size_t in_dim,
                  std::size_t hidden_dim, std::size_t n_hidden, Activation act,
                  Rng& rng);

  double forward(const Tensor& x, std::vector<DenseTrace>* traces = nullptr) const;

  /// Accumulates layer gradients from the traces of a prior forward; returns dL/dx.
  Tensor backward(double d_out, const std::vector<DenseTrace>& traces);

  void collect(std::vector<Parameter*>& out);
  std::size_t param_count() const;
};

/// Uniform init in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
void init_uniform_fan(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// ---------------------------------------------------------------------------
// Pairwise training configuration
// ---------------------------------------------------------------------------

struct TrainConfig {
  enum class Loss { hinge, binary_log };
  Loss loss = Loss::hinge;
  double margin = 1.0;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace bioir
