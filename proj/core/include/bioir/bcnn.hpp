#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bioir/embeddings.hpp"
#include "bioir/features.hpp"
#include "bioir/index.hpp"
#include "bioir/metrics.hpp"
#include "bioir/nn.hpp"
#include "bioir/tensor.hpp"
#include "bioir/textprep.hpp"

namespace bioir {

struct BcnnConfig {
  std::size_t n_filters = 50;
  std::size_t filter_width = 4;  // w
  std::size_t n_blocks = 2;
  std::size_t max_snippet_tokens = 40;
  std::size_t n_extra = kNumExtraFeatures;

  void validate() const;  // w >= 2, n_blocks >= 1
};

/// Wide (zero-padded) 1-D convolution over time. seq is [T x D], filters are
/// [F x w x D]; output is [T+w-1 x F]. No bias term, so an all-zero input
/// region contributes exactly 0.
Tensor conv1d_wide(const Tensor& seq, const Parameter& filters);

/// Accumulates filter gradients; adds the input gradient into d_seq when
/// non-null (needed to stack blocks).
void conv1d_wide_backward(const Tensor& d_out, const Tensor& seq, Parameter& filters,
                          Tensor* d_seq);

struct ConvBlockTrace {
  Tensor input;      // [T x D_in]
  Tensor conv_post;  // tanh output [T+w-1 x F]
};

/// One convolution/pooling block: wide conv -> tanh -> windowed average pool
/// of width w, restoring the input length: [T x D_in] -> [T x F].
Tensor conv_block(const Tensor& seq, const Parameter& filters, std::size_t w,
                  ConvBlockTrace* trace = nullptr);

/// Returns the gradient w.r.t. the block input; accumulates filter grads.
Tensor conv_block_backward(const Tensor& d_out, const ConvBlockTrace& trace, std::size_t w,
                           Parameter& filters);

/// Mean over unmasked time rows: [T x F] -> [F]. Throws std::invalid_argument
/// when every position is masked.
Tensor block_feature_vector(const Tensor& block_output, std::span<const std::uint8_t> mask);

struct BcnnStreamTrace {
  Tensor seq;
  std::vector<std::uint8_t> mask;
  std::vector<ConvBlockTrace> blocks;
  std::vector<Tensor> features;  // per block, [F]
};

struct BcnnTrace {
  BcnnStreamTrace query, snippet;
  std::vector<double> sims;  // per block cosine
  Tensor logistic_input;     // [n_blocks + n_extra]
  DenseTrace logistic_trace;
};

/// BCNN snippet scorer: n_blocks stacked conv blocks over the query and the
/// snippet streams (shared filters), per-block cosine of the two
/// block-feature vectors, and a logistic layer over [sims ; extra features].
class BcnnModel {
 public:
  BcnnModel(BcnnConfig cfg, std::size_t embedding_dim, std::uint64_t seed);

  const BcnnConfig& config() const { return cfg_; }

  /// Pre-sigmoid relevance logit (the pairwise log-loss operates on logits).
  /// Snippets longer than max_snippet_tokens are truncated; queries never
  /// are. Throws std::invalid_argument when either side has no tokens.
  double logit(const TokenizedText& query_tokens, const TokenizedText& snippet_tokens,
               const EmbeddingStore& store, const FeatureVec& extras,
               BcnnTrace* trace = nullptr) const;

  /// sigmoid(logit), strictly inside (0, 1).
  double bcnn_score(const TokenizedText& query_tokens, const TokenizedText& snippet_tokens,
                    const EmbeddingStore& store, const FeatureVec& extras,
                    BcnnTrace* trace = nullptr) const;

  void backward(double d_logit, const BcnnTrace& trace);

  /// Per-block feature vectors for one stream (exposed for the padding
  /// invariance property: masked positions are zeroed between blocks and
  /// excluded from every block's feature mean).
  std::vector<Tensor> stream_features(const Tensor& seq, std::span<const std::uint8_t> mask,
                                      BcnnStreamTrace* trace = nullptr) const;

  /// Embedding rows for a token sequence: [T x dim] (OOV tokens -> zero rows).
  Tensor embed_sequence(const std::vector<std::string>& tokens,
                        const EmbeddingStore& store) const;

  std::vector<Parameter*> parameters();
  std::size_t param_count() const;

 private:
  BcnnConfig cfg_;
  std::size_t dim_ = 0;
  std::vector<Parameter> filters_;  // block 0: [F, w, dim]; blocks 1..: [F, w, F]
  Parameter logistic_w_;            // [1, n_blocks + n_extra]
  Parameter logistic_b_;            // [1]
};

// ---------------------------------------------------------------------------
// Snippet candidates
// ---------------------------------------------------------------------------

struct SnippetCandidate {
  std::string doc_id;
  std::size_t sentence_index = 0;
  SentenceSpan span;      // within title + " " + abstract
  TokenizedText tokens;   // truncated to max_snippet_tokens
  double doc_score = 0.0; // from the document reranker
  double bcnn_score = 0.0;
  int label = -1;         // 1 relevant, 0 irrelevant, -1 unlabeled
};

/// Splits the document into sentences and labels each one relevant iff its
/// character span overlaps any gold span in at least one character. Gold
/// spans index into title + " " + abstract; an out-of-bounds span raises
/// std::runtime_error naming the document.
std::vector<SnippetCandidate> label_sentences(
    const Document& doc, const std::vector<std::pair<std::size_t, std::size_t>>& gold_spans,
    std::size_t max_snippet_tokens);

/// Keeps the top K_s candidates by bcnn score (ties: lower doc_id, then lower
/// sentence index), then reorders them by (doc_score desc, bcnn score desc,
/// sentence_index asc) per the document-score post-processing rule.
std::vector<SnippetCandidate> rank_and_postprocess(std::vector<SnippetCandidate> candidates,
                                                   std::size_t k_s);

}  // namespace bioir
