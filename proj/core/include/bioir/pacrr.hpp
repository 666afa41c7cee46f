#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bioir/embeddings.hpp"
#include "bioir/features.hpp"
#include "bioir/nn.hpp"
#include "bioir/rng.hpp"
#include "bioir/tensor.hpp"
#include "bioir/textprep.hpp"

namespace bioir {

struct PacrrConfig {
  std::size_t l_q = 30;             // max query terms
  std::size_t l_d = 300;            // max document terms
  std::size_t l_g = 3;              // largest n x n kernel
  std::size_t filters_per_size = 16;
  std::size_t k = 2;                // k-max pooling
  std::size_t mlp_hidden = 7;
  std::size_t mlp_layers = 2;
  enum class Head { concat_mlp, per_term_mlp };
  Head head = Head::per_term_mlp;
  std::size_t n_extra = kNumExtraFeatures;

  void validate() const;  // l_g >= 2, k >= 1, l_q >= 1, l_d >= 1

  /// Width of one document-aware q-term encoding row:
  /// (l_g - 1) k-max blocks of size k (n = 2..l_g) + the raw-row k-max block
  /// (n = 1) + the normalized idf slot.
  std::size_t row_width() const { return (l_g - 1) * k + k + 1; }
};

/// Query x document cosine-similarity grid with padding masks. Padded and
/// OOV rows/columns are exactly zero and masked.
struct SimMatrix {
  Tensor values;                     // [l_q, l_d]
  std::vector<std::uint8_t> q_mask;  // 1 = real, in-vocab q-term
  std::vector<std::uint8_t> d_mask;  // 1 = real, in-vocab d-term
};

/// Queries are truncated at l_q then padded; documents truncated at l_d.
/// Throws std::invalid_argument when the query has no tokens.
SimMatrix build_sim_matrix(const TokenizedText& query, const TokenizedText& doc,
                           const EmbeddingStore& store, const PacrrConfig& cfg);

/// idf(q_i) for the first l_q query terms (softmax logits for the idf slot).
std::vector<double> query_idf_logits(const TokenizedText& query, const EmbeddingStore& store,
                                     std::size_t l_q);

struct PacrrTrace {
  // encoding stage
  std::vector<Conv2dTrace> conv_traces;                             // one per size n=2..l_g
  std::vector<MaxFilterTrace> max_traces;                           // one per size
  std::vector<std::vector<std::vector<std::size_t>>> kmax_indices;  // [size][row] -> cols
  std::vector<std::vector<std::size_t>> raw_kmax_indices;           // [row] -> cols
  Tensor encodings;                                                 // [l_q, row_width]
  std::vector<std::uint8_t> q_mask;
  // head stage
  std::vector<std::vector<DenseTrace>> per_term_traces;  // per unmasked row
  Tensor agg_input;                                      // [l_q + n_extra]
  DenseTrace agg_trace;
  std::vector<DenseTrace> concat_traces;
};

/// PACRR / TERM-PACRR document reranker. All trainable parameters are owned
/// here; forward passes are pure and safe to share across threads.
class PacrrModel {
 public:
  PacrrModel(PacrrConfig cfg, std::uint64_t seed);

  const PacrrConfig& config() const { return cfg_; }

  /// Document-aware q-term encodings: per n in 2..l_g, the sim matrix is
  /// padded with n-1 zero columns/rows (right/bottom), convolved, max-pooled
  /// over filters, then row-wise k-max pooled; the n=1 block k-max pools the
  /// raw sim row; the softmax-normalized idf of unmasked q-terms is appended.
  Tensor doc_encodings(const SimMatrix& sim, std::span<const double> idf_logits,
                       PacrrTrace* trace = nullptr) const;

  /// TERM-PACRR head: one shared MLP scores each unmasked encoding row
  /// (masked rows contribute exactly 0); a final linear layer maps
  /// [l_q q-term scores ; extra features] to the relevance score.
  double term_pacrr_score(const Tensor& encodings, std::span<const std::uint8_t> q_mask,
                          const FeatureVec& extras, PacrrTrace* trace = nullptr) const;

  /// PACRR head: all rows concatenated, extra features appended, one MLP.
  double pacrr_score(const Tensor& encodings, const FeatureVec& extras,
                     PacrrTrace* trace = nullptr) const;

  /// Full forward pass dispatching on cfg.head.
  double score(const SimMatrix& sim, std::span<const double> idf_logits,
               const FeatureVec& extras, PacrrTrace* trace = nullptr) const;

  /// Accumulates parameter gradients for a prior traced score() call.
  void backward(double d_score, const PacrrTrace& trace);

  std::vector<Parameter*> parameters();
  std::size_t param_count() const;

 private:
  void encodings_backward(const Tensor& d_encodings, const PacrrTrace& trace);

  PacrrConfig cfg_;
  std::vector<Parameter> conv_filters_;  // [filters_per_size, n, n] for n=2..l_g
  Mlp mlp_;
  Parameter agg_w_;  // per-term head only
  Parameter agg_b_;
};

}  // namespace bioir
