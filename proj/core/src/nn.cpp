#include "bioir/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bioir {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? x : kLeakySlope * x;
    case Activation::linear: return x;
    case Activation::sigmoid: return sigmoid(x);
  }
  throw std::invalid_argument("apply_activation: unknown activation");
}

double activation_grad(Activation act, double pre) {
  switch (act) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return pre > 0.0 ? 1.0 : kLeakySlope;
    case Activation::linear: return 1.0;
    case Activation::sigmoid: {
      const double s = sigmoid(pre);
      return s * (1.0 - s);
    }
  }
  throw std::invalid_argument("activation_grad: unknown activation");
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

Tensor dense_forward(const Tensor& x, const Parameter& W, const Parameter& b,
                     Activation act, DenseTrace* trace) {
  if (x.rank() != 1 || W.value.rank() != 2 || b.value.rank() != 1) {
    throw std::invalid_argument("dense_forward: need x rank 1, W rank 2, b rank 1; got x " +
                                x.shape_string() + ", W " + W.value.shape_string() + ", b " +
                                b.value.shape_string());
  }
  const std::size_t rows = W.value.dim(0);
  const std::size_t cols = W.value.dim(1);
  if (x.dim(0) != cols || b.value.dim(0) != rows) {
    throw std::invalid_argument("dense_forward: shape mismatch between x " + x.shape_string() +
                                ", W " + W.value.shape_string() + " and b " +
                                b.value.shape_string());
  }
  Tensor pre({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = b.value[i];
    for (std::size_t j = 0; j < cols; ++j) acc += W.value(i, j) * x[j];
    pre[i] = acc;
  }
  Tensor out({rows});
  for (std::size_t i = 0; i < rows; ++i) out[i] = apply_activation(act, pre[i]);
  if (trace != nullptr) {
    trace->input = x;
    trace->pre = pre;
    trace->act = act;
  }
  return out;
}

Tensor dense_backward(const Tensor& d_out, const DenseTrace& trace, Parameter& W, Parameter& b) {
  const std::size_t rows = W.value.dim(0);
  const std::size_t cols = W.value.dim(1);
  if (d_out.rank() != 1 || d_out.dim(0) != rows) {
    throw std::invalid_argument("dense_backward: d_out " + d_out.shape_string() +
                                " does not match W " + W.value.shape_string());
  }
  Tensor dx({cols});
  for (std::size_t i = 0; i < rows; ++i) {
    const double d_pre = d_out[i] * activation_grad(trace.act, trace.pre[i]);
    b.grad[i] += d_pre;
    for (std::size_t j = 0; j < cols; ++j) {
      W.grad(i, j) += d_pre * trace.input[j];
      dx[j] += d_pre * W.value(i, j);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Convolution and poolings
// ---------------------------------------------------------------------------

Tensor conv2d_valid(const Tensor& input, const Parameter& filters, Conv2dTrace* trace) {
  if (input.rank() != 2 || filters.value.rank() != 3) {
    throw std::invalid_argument("conv2d_valid: need input rank 2 and filters rank 3; got " +
                                input.shape_string() + " and " + filters.value.shape_string());
  }
  const std::size_t n_f = filters.value.dim(0);
  const std::size_t n = filters.value.dim(1);
  if (filters.value.dim(2) != n) {
    throw std::invalid_argument("conv2d_valid: kernels must be square, got " +
                                filters.value.shape_string());
  }
  const std::size_t rows = input.dim(0);
  const std::size_t cols = input.dim(1);
  if (rows < n || cols < n) {
    throw std::invalid_argument("conv2d_valid: kernel size exceeds input " +
                                input.shape_string() + " vs " + filters.value.shape_string());
  }
  const std::size_t out_r = rows - n + 1;
  const std::size_t out_c = cols - n + 1;
  Tensor out({n_f, out_r, out_c});
  for (std::size_t f = 0; f < n_f; ++f) {
    for (std::size_t i = 0; i < out_r; ++i) {
      for (std::size_t j = 0; j < out_c; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t b = 0; b < n; ++b) {
            acc += input(i + a, j + b) * filters.value(f, a, b);
          }
        }
        out(f, i, j) = acc;
      }
    }
  }
  if (trace != nullptr) trace->input = input;
  return out;
}

void conv2d_backward(const Tensor& d_maps, const Conv2dTrace& trace, Parameter& filters) {
  const std::size_t n_f = filters.value.dim(0);
  const std::size_t n = filters.value.dim(1);
  const std::size_t out_r = d_maps.dim(1);
  const std::size_t out_c = d_maps.dim(2);
  if (d_maps.rank() != 3 || d_maps.dim(0) != n_f) {
    throw std::invalid_argument("conv2d_backward: d_maps " + d_maps.shape_string() +
                                " does not match filters " + filters.value.shape_string());
  }
  for (std::size_t f = 0; f < n_f; ++f) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < out_r; ++i) {
          for (std::size_t j = 0; j < out_c; ++j) {
            acc += d_maps(f, i, j) * trace.input(i + a, j + b);
          }
        }
        filters.grad(f, a, b) += acc;
      }
    }
  }
}

Tensor max_over_filters(const Tensor& maps, MaxFilterTrace* trace) {
  if (maps.rank() != 3) {
    throw std::invalid_argument("max_over_filters: need rank 3, got " + maps.shape_string());
  }
  const std::size_t n_f = maps.dim(0);
  const std::size_t rows = maps.dim(1);
  const std::size_t cols = maps.dim(2);
  if (n_f == 0) throw std::invalid_argument("max_over_filters: zero filters");
  Tensor out({rows, cols});
  std::vector<std::size_t> argmax(rows * cols, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double best = maps(0, i, j);
      std::size_t best_f = 0;
      for (std::size_t f = 1; f < n_f; ++f) {
        if (maps(f, i, j) > best) {
          best = maps(f, i, j);
          best_f = f;
        }
      }
      out(i, j) = best;
      argmax[i * cols + j] = best_f;
    }
  }
  if (trace != nullptr) {
    trace->argmax = std::move(argmax);
    trace->rows = rows;
    trace->cols = cols;
    trace->n_filters = n_f;
  }
  return out;
}

Tensor max_over_filters_backward(const Tensor& d_out, const MaxFilterTrace& trace) {
  if (d_out.rank() != 2 || d_out.dim(0) != trace.rows || d_out.dim(1) != trace.cols) {
    throw std::invalid_argument("max_over_filters_backward: d_out " + d_out.shape_string() +
                                " does not match the trace");
  }
  Tensor d_maps({trace.n_filters, trace.rows, trace.cols});
  for (std::size_t i = 0; i < trace.rows; ++i) {
    for (std::size_t j = 0; j < trace.cols; ++j) {
      d_maps(trace.argmax[i * trace.cols + j], i, j) = d_out(i, j);
    }
  }
  return d_maps;
}

std::vector<double> kmax_pool(std::span<const double> row, std::size_t k,
                              std::vector<std::size_t>* picked) {
  if (k == 0) throw std::invalid_argument("kmax_pool: k must be positive");
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  const std::size_t taken = std::min(k, row.size());
  std::vector<double> out(k, 0.0);
  if (picked != nullptr) picked->clear();
  for (std::size_t i = 0; i < taken; ++i) {
    out[i] = row[order[i]];
    if (picked != nullptr) picked->push_back(order[i]);
  }
  return out;
}

Tensor windowed_avg_pool(const Tensor& seq, std::size_t w) {
  if (seq.rank() != 2) {
    throw std::invalid_argument("windowed_avg_pool: need rank 2, got " + seq.shape_string());
  }
  const std::size_t len = seq.dim(0);
  const std::size_t dim = seq.dim(1);
  if (w == 0 || w > len) {
    throw std::invalid_argument("windowed_avg_pool: window " + std::to_string(w) +
                                " invalid for length " + std::to_string(len));
  }
  Tensor out({len - w + 1, dim});
  for (std::size_t p = 0; p + w <= len; ++p) {
    for (std::size_t d = 0; d < dim; ++d) {
      double acc = 0.0;
      for (std::size_t t = p; t < p + w; ++t) acc += seq(t, d);
      out(p, d) = acc / static_cast<double>(w);
    }
  }
  return out;
}

Tensor windowed_avg_pool_backward(const Tensor& d_out, std::size_t in_len, std::size_t w) {
  if (d_out.rank() != 2 || d_out.dim(0) != in_len - w + 1) {
    throw std::invalid_argument("windowed_avg_pool_backward: d_out " + d_out.shape_string() +
                                " does not match length " + std::to_string(in_len));
  }
  const std::size_t dim = d_out.dim(1);
  Tensor d_in({in_len, dim});
  const double inv_w = 1.0 / static_cast<double>(w);
  for (std::size_t p = 0; p < d_out.dim(0); ++p) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double g = d_out(p, d) * inv_w;
      for (std::size_t t = p; t < p + w; ++t) d_in(t, d) += g;
    }
  }
  return d_in;
}

// ---------------------------------------------------------------------------
// Softmax and losses
// ---------------------------------------------------------------------------

std::vector<double> masked_softmax(std::span<const double> scores,
                                   std::span<const std::uint8_t> active) {
  if (scores.size() != active.size()) {
    throw std::invalid_argument("masked_softmax: scores and mask lengths differ");
  }
  double max_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (active[i] != 0) max_v = std::max(max_v, scores[i]);
  }
  if (!std::isfinite(max_v)) {
    throw std::invalid_argument("masked_softmax: every position is masked");
  }
  std::vector<double> out(scores.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (active[i] != 0) {
      out[i] = std::exp(scores[i] - max_v);
      denom += out[i];
    }
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (active[i] != 0) out[i] /= denom;
  }
  return out;
}

std::vector<double> masked_softmax_backward(std::span<const double> probs,
                                            std::span<const double> d_probs,
                                            std::span<const std::uint8_t> active) {
  if (probs.size() != d_probs.size() || probs.size() != active.size()) {
    throw std::invalid_argument("masked_softmax_backward: length mismatch");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (active[i] != 0) dot += d_probs[i] * probs[i];
  }
  std::vector<double> d_scores(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (active[i] != 0) d_scores[i] = probs[i] * (d_probs[i] - dot);
  }
  return d_scores;
}

double hinge_pair_loss(double s_pos, double s_neg, double margin) {
  const double z = margin - s_pos + s_neg;
  // std::max(0.0, NaN) would return 0.0 and hide a diverged model from the
  // trainer's non-finite guard, so propagate bad inputs instead.
  if (!std::isfinite(z)) return z;
  return std::max(0.0, z);
}

PairGrad hinge_pair_grad(double s_pos, double s_neg, double margin) {
  if (margin - s_pos + s_neg > 0.0) return {-1.0, 1.0};
  return {0.0, 0.0};
}

namespace {
double clamp_prob(double p) {
  if (std::isnan(p)) return p;  // keep NaN visible to the non-finite guard
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}
}  // namespace

double binary_log_pair_loss(double s_pos, double s_neg) {
  const double p_pos = clamp_prob(sigmoid(s_pos));
  const double p_neg = clamp_prob(sigmoid(s_neg));
  return -std::log(p_pos) - std::log(1.0 - p_neg);
}

PairGrad binary_log_pair_grad(double s_pos, double s_neg) {
  // d/ds [-ln sigmoid(s)] = sigmoid(s) - 1; d/ds [-ln(1 - sigmoid(s))] = sigmoid(s).
  return {sigmoid(s_pos) - 1.0, sigmoid(s_neg)};
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

Mlp Mlp::make(const std::string& name_prefix, std::size_t in_dim, std::size_t hidden_dim,
              std::size_t n_hidden, Activation act, Rng& rng) {
  if (in_dim == 0 || hidden_dim == 0) {
    throw std::invalid_argument("Mlp::make: zero layer width");
  }
  Mlp mlp;
  mlp.act = act;
  std::size_t prev = in_dim;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    const std::string tag = std::to_string(l);
    mlp.weights.emplace_back(name_prefix + ".hidden" + tag + ".weight",
                             Tensor({hidden_dim, prev}));
    mlp.biases.emplace_back(name_prefix + ".hidden" + tag + ".bias", Tensor({hidden_dim}));
    init_uniform_fan(mlp.weights.back(), prev, hidden_dim, rng);
    prev = hidden_dim;
  }
  mlp.weights.emplace_back(name_prefix + ".out.weight", Tensor({std::size_t{1}, prev}));
  mlp.biases.emplace_back(name_prefix + ".out.bias", Tensor({std::size_t{1}}));
  init_uniform_fan(mlp.weights.back(), prev, 1, rng);
  return mlp;
}

double Mlp::forward(const Tensor& x, std::vector<DenseTrace>* traces) const {
  if (traces != nullptr) traces->assign(weights.size(), DenseTrace{});
  Tensor h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const bool last = l + 1 == weights.size();
    DenseTrace* t = traces != nullptr ? &(*traces)[l] : nullptr;
    h = dense_forward(h, weights[l], biases[l], last ? Activation::linear : act, t);
  }
  return h[0];
}

Tensor Mlp::backward(double d_out, const std::vector<DenseTrace>& traces) {
  if (traces.size() != weights.size()) {
    throw std::invalid_argument("Mlp::backward: trace count does not match layer count");
  }
  Tensor d = Tensor({std::size_t{1}});
  d[0] = d_out;
  for (std::size_t l = weights.size(); l-- > 0;) {
    d = dense_backward(d, traces[l], weights[l], biases[l]);
  }
  return d;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.value.size();
  for (const auto& b : biases) n += b.value.size();
  return n;
}

void init_uniform_fan(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : p.value.flat()) v = rng.uniform(-bound, bound);
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (max_epochs == 0) throw std::invalid_argument("TrainConfig: max_epochs must be positive");
  if (loss == Loss::hinge && margin <= 0.0) {
    throw std::invalid_argument("TrainConfig: hinge margin must be positive");
  }
}

}  // namespace bioir
