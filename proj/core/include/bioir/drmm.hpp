#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bioir/embeddings.hpp"
#include "bioir/features.hpp"
#include "bioir/nn.hpp"
#include "bioir/ranking.hpp"
#include "bioir/tensor.hpp"
#include "bioir/textprep.hpp"

namespace bioir {

struct DrmmConfig {
  std::size_t n_buckets = 30;
  std::size_t mlp_hidden = 8;
  std::size_t mlp_layers = 2;
  std::size_t n_extra = kNumExtraFeatures;

  void validate() const;  // n_buckets >= 2
};

struct AbelExtensionConfig {
  std::size_t l_w = 20;   // density window length
  std::size_t t_d = 100;  // confidence pool size
  double t_c = 0.01;      // confidence threshold
  bool density_enabled = false;
  bool confidence_enabled = false;

  void validate() const;  // l_w >= 1, t_d >= 1, 0 < t_c < 1
};

/// ln(1 + count) histogram of cosine(e(q_term), e(d_term)) over all document
/// terms. Bucket i covers [-1 + 2i/B, -1 + 2(i+1)/B), the last bucket closed
/// at 1. Throws std::invalid_argument for an empty document.
Tensor cosine_histogram(const std::string& q_term, const std::vector<std::string>& doc_terms,
                        const EmbeddingStore& store, std::size_t n_buckets);

// ---------------------------------------------------------------------------
// Query-side gating: g = softmax over w_g . [e(q_i); idf(q_i)]
// ---------------------------------------------------------------------------

struct GatingTrace {
  std::vector<Tensor> phi_g;     // per q-term [dim + 1]
  std::vector<double> weights;   // softmax outputs
};

std::vector<double> gate_weights(const std::vector<std::string>& query_terms,
                                 const EmbeddingStore& store, const Parameter& w_g,
                                 GatingTrace* trace = nullptr);

void gate_weights_backward(std::span<const double> d_weights, const GatingTrace& trace,
                           Parameter& w_g);

// ---------------------------------------------------------------------------
// Context encoder (residual one-layer convolutional encoding):
//   c(t_i) = leaky_relu(W_c [e(t_{i-1}); e(t_i); e(t_{i+1})] + b_c) + e(t_i)
// with zero embeddings beyond the sequence boundaries.
// ---------------------------------------------------------------------------

struct ContextEncoderParams {
  Parameter W_c;  // [dim, 3*dim]
  Parameter b_c;  // [dim]

  ContextEncoderParams() = default;
  ContextEncoderParams(const std::string& prefix, std::size_t dim);
};

struct ContextTrace {
  std::vector<Tensor> inputs;  // per token, [3*dim]
  std::vector<Tensor> pre;     // per token, [dim]
};

std::vector<Tensor> context_encode(const std::vector<std::string>& tokens,
                                   const EmbeddingStore& store,
                                   const ContextEncoderParams& params,
                                   ContextTrace* trace = nullptr);

void context_encode_backward(const std::vector<Tensor>& d_ctx, const ContextTrace& trace,
                             ContextEncoderParams& params);

// ---------------------------------------------------------------------------
// ABEL q-term encoding (attention + Hadamard):
//   a_{i,j} = masked softmax over c(q_i) . c(d_j)
//   d_{q_i} = sum_j a_{i,j} c(d_j)
//   phi_H   = d_{q_i} (Hadamard) c(q_i)
// ---------------------------------------------------------------------------

struct AbelQtermTrace {
  std::vector<double> att_weights;
  Tensor q_ctx;  // c(q_i)
  Tensor d_rep;  // attention-weighted document representation
};

/// Throws std::invalid_argument when every d-term is masked.
Tensor abel_qterm_encoding(const Tensor& q_ctx_i, const std::vector<Tensor>& doc_ctx,
                           std::span<const std::uint8_t> d_mask,
                           AbelQtermTrace* trace = nullptr);

/// Index-based convenience overload.
Tensor abel_qterm_encoding(std::size_t q_index, const std::vector<Tensor>& query_ctx,
                           const std::vector<Tensor>& doc_ctx,
                           std::span<const std::uint8_t> d_mask,
                           AbelQtermTrace* trace = nullptr);

/// Backward: returns d c(q_i); accumulates per-d-term gradients into d_doc_ctx.
Tensor abel_qterm_encoding_backward(const Tensor& d_phi_h, const AbelQtermTrace& trace,
                                    const std::vector<Tensor>& doc_ctx,
                                    std::span<const std::uint8_t> d_mask,
                                    std::vector<Tensor>& d_doc_ctx);

// ---------------------------------------------------------------------------
// DRMM (histogram variant)
// ---------------------------------------------------------------------------

struct DrmmTrace {
  std::vector<std::vector<DenseTrace>> mlp_traces;  // per q-term
  std::vector<double> term_scores;
  GatingTrace gating;
  Tensor final_input;  // [1 + n_extra]
  DenseTrace final_trace;
};

class DrmmModel {
 public:
  DrmmModel(DrmmConfig cfg, std::size_t embedding_dim, std::uint64_t seed);

  const DrmmConfig& config() const { return cfg_; }

  /// Per q-term histogram -> shared MLP -> gated sum -> linear layer over
  /// [deep score; extra features]. Throws std::invalid_argument when the
  /// query or the document has no tokens.
  double score(const TokenizedText& query, const TokenizedText& doc,
               const EmbeddingStore& store, const FeatureVec& extras,
               DrmmTrace* trace = nullptr) const;

  void backward(double d_score, const DrmmTrace& trace);

  std::vector<Parameter*> parameters();
  std::size_t param_count() const;

 private:
  DrmmConfig cfg_;
  Parameter w_g_;  // [dim + 1]
  Mlp mlp_;        // n_buckets -> hidden^mlp_layers -> 1, leaky_relu
  Parameter final_w_;  // [1, 1 + n_extra]
  Parameter final_b_;  // [1]
};

// ---------------------------------------------------------------------------
// ABEL-DRMM with the density and confidence extensions
// ---------------------------------------------------------------------------

struct AbelTrace {
  ContextTrace q_ctx_trace, d_ctx_trace;
  std::vector<Tensor> q_ctx, d_ctx;
  std::vector<std::uint8_t> d_mask;
  std::vector<AbelQtermTrace> qterm_traces;
  std::vector<std::vector<DenseTrace>> mlp_traces;
  std::vector<double> term_scores;
  GatingTrace gating;
  Tensor final_input;
  DenseTrace final_trace;
};

struct DensityTrace {
  AbelTrace base;
  AbelTrace window;
  std::size_t window_start = 0;
  std::size_t window_len = 0;
};

class AbelDrmmModel {
 public:
  AbelDrmmModel(DrmmConfig cfg, std::size_t embedding_dim, std::uint64_t seed);

  const DrmmConfig& config() const { return cfg_; }
  std::size_t embedding_dim() const { return dim_; }

  /// Eq. 1-4 scorer with gating and the extra-features linear layer.
  /// Throws std::invalid_argument when the query is empty or every document
  /// term is out of vocabulary (attention has nothing to attend to).
  double score(const TokenizedText& query, const TokenizedText& doc,
               const EmbeddingStore& store, const FeatureVec& extras,
               AbelTrace* trace = nullptr) const;

  void backward(double d_score, const AbelTrace& trace);

  /// Density extension: base score plus the best score over all l_w-token
  /// windows (stride 1; a document no longer than l_w has exactly one window
  /// equal to the whole document). Windows recompute context encodings
  /// locally and are scored by the same network with the same document-level
  /// extra features; windows whose tokens are all out of vocabulary are
  /// skipped. Ties prefer the earliest window.
  double density_score(const TokenizedText& query, const TokenizedText& doc,
                       const EmbeddingStore& store, const FeatureVec& extras,
                       std::size_t l_w, DensityTrace* trace = nullptr) const;

  void density_backward(double d_score, const DensityTrace& trace);

  std::vector<Parameter*> parameters();
  std::size_t param_count() const;

 private:
  double score_tokens(const std::vector<std::string>& q_tokens,
                      const std::vector<std::string>& d_tokens,
                      const EmbeddingStore& store, const FeatureVec& extras,
                      AbelTrace* trace) const;

  DrmmConfig cfg_;
  std::size_t dim_ = 0;
  ContextEncoderParams ctx_;
  Parameter w_g_;
  Mlp mlp_;  // dim -> hidden^mlp_layers -> 1, leaky_relu
  Parameter final_w_;
  Parameter final_b_;
};

/// Softmax over the scores of the top min(t_d, n) entries of a descending
/// list; keeps those with normalized score strictly above t_c, in order.
/// Entries beyond the top t_d are dropped. An empty result (the all-equal
/// degenerate case) is reported on stderr.
RankedList confidence_filter(const RankedList& scored_docs, const AbelExtensionConfig& cfg);

}  // namespace bioir
