#include "bioir/bcnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "bioir/rng.hpp"

namespace bioir {

void BcnnConfig::validate() const {
  if (n_filters == 0) throw std::invalid_argument("BcnnConfig: n_filters must be positive");
  if (filter_width < 2) throw std::invalid_argument("BcnnConfig: filter_width must be >= 2");
  if (n_blocks == 0) throw std::invalid_argument("BcnnConfig: n_blocks must be >= 1");
  if (max_snippet_tokens == 0)
    throw std::invalid_argument("BcnnConfig: max_snippet_tokens must be positive");
}

// ---------------------------------------------------------------------------
// Wide 1-D convolution
// ---------------------------------------------------------------------------

Tensor conv1d_wide(const Tensor& seq, const Parameter& filters) {
  if (seq.shape().size() != 2)
    throw std::invalid_argument("conv1d_wide: sequence must be rank 2, got shape " +
                                seq.shape_string());
  if (filters.value.shape().size() != 3)
    throw std::invalid_argument("conv1d_wide: filters must be rank 3, got shape " +
                                filters.value.shape_string());
  const std::size_t t_len = seq.shape()[0];
  const std::size_t d_in = seq.shape()[1];
  const std::size_t n_f = filters.value.shape()[0];
  const std::size_t w = filters.value.shape()[1];
  if (filters.value.shape()[2] != d_in)
    throw std::invalid_argument("conv1d_wide: filter depth " +
                                std::to_string(filters.value.shape()[2]) +
                                " does not match input depth " + std::to_string(d_in));
  if (t_len == 0) throw std::invalid_argument("conv1d_wide: empty sequence");

  const std::size_t out_len = t_len + w - 1;
  Tensor out({out_len, n_f});
  // out[o][f] = sum_a K[f][a][:] . seq[o - (w-1) + a][:], zero outside [0, T).
  for (std::size_t o = 0; o < out_len; ++o) {
    for (std::size_t a = 0; a < w; ++a) {
      const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(o + a) -
                               static_cast<std::ptrdiff_t>(w - 1);
      if (t < 0 || t >= static_cast<std::ptrdiff_t>(t_len)) continue;
      for (std::size_t f = 0; f < n_f; ++f) {
        double acc = 0.0;
        for (std::size_t d = 0; d < d_in; ++d) {
          acc += filters.value(f, a, d) * seq(static_cast<std::size_t>(t), d);
        }
        out(o, f) += acc;
      }
    }
  }
  return out;
}

void conv1d_wide_backward(const Tensor& d_out, const Tensor& seq, Parameter& filters,
                          Tensor* d_seq) {
  const std::size_t t_len = seq.shape()[0];
  const std::size_t d_in = seq.shape()[1];
  const std::size_t n_f = filters.value.shape()[0];
  const std::size_t w = filters.value.shape()[1];
  const std::size_t out_len = t_len + w - 1;
  if (d_out.shape().size() != 2 || d_out.shape()[0] != out_len || d_out.shape()[1] != n_f)
    throw std::invalid_argument("conv1d_wide_backward: gradient shape " + d_out.shape_string() +
                                " does not match output [" + std::to_string(out_len) + ", " +
                                std::to_string(n_f) + "]");
  for (std::size_t o = 0; o < out_len; ++o) {
    for (std::size_t a = 0; a < w; ++a) {
      const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(o + a) -
                               static_cast<std::ptrdiff_t>(w - 1);
      if (t < 0 || t >= static_cast<std::ptrdiff_t>(t_len)) continue;
      const auto ti = static_cast<std::size_t>(t);
      for (std::size_t f = 0; f < n_f; ++f) {
        const double g = d_out(o, f);
        if (g == 0.0) continue;
        for (std::size_t d = 0; d < d_in; ++d) {
          filters.grad(f, a, d) += g * seq(ti, d);
          if (d_seq != nullptr) (*d_seq)(ti, d) += g * filters.value(f, a, d);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Conv block: conv -> tanh -> windowed average pool
// ---------------------------------------------------------------------------

Tensor conv_block(const Tensor& seq, const Parameter& filters, std::size_t w,
                  ConvBlockTrace* trace) {
  Tensor post = conv1d_wide(seq, filters);
  for (double& v : post.flat()) v = std::tanh(v);
  // Width-w sliding mean over the time axis; length returns to T.
  Tensor out = windowed_avg_pool(post, w);
  if (trace != nullptr) {
    trace->input = seq;
    trace->conv_post = post;
  }
  return out;
}

Tensor conv_block_backward(const Tensor& d_out, const ConvBlockTrace& trace, std::size_t w,
                           Parameter& filters) {
  const Tensor& post = trace.conv_post;
  const std::size_t rows = post.shape()[0];
  const std::size_t n_f = post.shape()[1];
  const std::size_t t_len = rows - (w - 1);
  if (d_out.shape().size() != 2 || d_out.shape()[0] != t_len || d_out.shape()[1] != n_f)
    throw std::invalid_argument("conv_block_backward: gradient shape " + d_out.shape_string() +
                                " does not match block output");

  Tensor d_pre = windowed_avg_pool_backward(d_out, rows, w);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < n_f; ++f) {
      const double p = post(r, f);
      d_pre(r, f) *= 1.0 - p * p;  // tanh'
    }
  }
  Tensor d_seq(trace.input.shape());
  conv1d_wide_backward(d_pre, trace.input, filters, &d_seq);
  return d_seq;
}

Tensor block_feature_vector(const Tensor& block_output, std::span<const std::uint8_t> mask) {
  const std::size_t t_len = block_output.shape()[0];
  const std::size_t n_f = block_output.shape()[1];
  if (mask.size() != t_len)
    throw std::invalid_argument("block_feature_vector: mask length " +
                                std::to_string(mask.size()) + " does not match " +
                                std::to_string(t_len) + " positions");
  std::size_t active = 0;
  Tensor feat({n_f});
  for (std::size_t t = 0; t < t_len; ++t) {
    if (mask[t] == 0) continue;
    ++active;
    for (std::size_t f = 0; f < n_f; ++f) feat[f] += block_output(t, f);
  }
  if (active == 0)
    throw std::invalid_argument("block_feature_vector: every position is masked");
  for (double& v : feat.flat()) v /= static_cast<double>(active);
  return feat;
}

// ---------------------------------------------------------------------------
// Cosine with gradients (the embedding-level cosine helper is forward-only)
// ---------------------------------------------------------------------------

namespace {

constexpr double kNormFloor = 1e-12;

double traced_cosine(const Tensor& u, const Tensor& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  nu = std::sqrt(nu);
  nv = std::sqrt(nv);
  if (nu < kNormFloor || nv < kNormFloor) return 0.0;
  return dot / (nu * nv);
}

/// d cos(u,v) accumulated into d_u and d_v; the degenerate zero-norm case
/// uses the zero subgradient matching the forward convention.
void traced_cosine_backward(double d_cos, const Tensor& u, const Tensor& v, Tensor& d_u,
                            Tensor& d_v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  nu = std::sqrt(nu);
  nv = std::sqrt(nv);
  if (nu < kNormFloor || nv < kNormFloor) return;
  const double c = dot / (nu * nv);
  for (std::size_t i = 0; i < u.size(); ++i) {
    d_u[i] += d_cos * (v[i] / (nu * nv) - c * u[i] / (nu * nu));
    d_v[i] += d_cos * (u[i] / (nu * nv) - c * v[i] / (nv * nv));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

BcnnModel::BcnnModel(BcnnConfig cfg, std::size_t embedding_dim, std::uint64_t seed)
    : cfg_(cfg), dim_(embedding_dim) {
  cfg_.validate();
  if (dim_ == 0) throw std::invalid_argument("BcnnModel: embedding_dim must be positive");
  Rng rng(seed);
  filters_.reserve(cfg_.n_blocks);
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    const std::size_t depth = (b == 0) ? dim_ : cfg_.n_filters;
    Parameter p;
    p.name = "bcnn.block" + std::to_string(b) + ".filters";
    p.value = Tensor({cfg_.n_filters, cfg_.filter_width, depth});
    p.grad = Tensor(p.value.shape());
    init_uniform_fan(p, cfg_.filter_width * depth, cfg_.n_filters, rng);
    filters_.push_back(std::move(p));
  }
  const std::size_t logistic_in = cfg_.n_blocks + cfg_.n_extra;
  logistic_w_.name = "bcnn.logistic.weight";
  logistic_w_.value = Tensor({1, logistic_in});
  logistic_w_.grad = Tensor({1, logistic_in});
  init_uniform_fan(logistic_w_, logistic_in, 1, rng);
  logistic_b_.name = "bcnn.logistic.bias";
  logistic_b_.value = Tensor({1});
  logistic_b_.grad = Tensor({1});
}

Tensor BcnnModel::embed_sequence(const std::vector<std::string>& tokens,
                                 const EmbeddingStore& store) const {
  if (tokens.empty()) throw std::invalid_argument("embed_sequence: empty token sequence");
  Tensor seq({tokens.size(), dim_});
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const EmbeddingRef ref = store.lookup(tokens[t]);
    for (std::size_t d = 0; d < dim_; ++d) seq(t, d) = ref.values[d];
  }
  return seq;
}

std::vector<Tensor> BcnnModel::stream_features(const Tensor& seq,
                                               std::span<const std::uint8_t> mask,
                                               BcnnStreamTrace* trace) const {
  if (seq.shape().size() != 2 || seq.shape()[1] != dim_)
    throw std::invalid_argument("stream_features: expected [T, " + std::to_string(dim_) +
                                "] input, got " + seq.shape_string());
  if (mask.size() != seq.shape()[0])
    throw std::invalid_argument("stream_features: mask length does not match sequence length");
  if (trace != nullptr) {
    trace->seq = seq;
    trace->mask.assign(mask.begin(), mask.end());
    trace->blocks.clear();
    trace->features.clear();
  }
  std::vector<Tensor> features;
  features.reserve(cfg_.n_blocks);
  Tensor x = seq;
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    ConvBlockTrace block_trace;
    Tensor out = conv_block(x, filters_[b], cfg_.filter_width,
                            trace != nullptr ? &block_trace : nullptr);
    // Masked positions are zeroed so they neither feed the next block nor
    // change with padding length.
    for (std::size_t t = 0; t < out.shape()[0]; ++t) {
      if (mask[t] != 0) continue;
      for (std::size_t f = 0; f < out.shape()[1]; ++f) out(t, f) = 0.0;
    }
    features.push_back(block_feature_vector(out, mask));
    if (trace != nullptr) {
      trace->blocks.push_back(std::move(block_trace));
      trace->features.push_back(features.back());
    }
    x = std::move(out);
  }
  return features;
}

double BcnnModel::logit(const TokenizedText& query_tokens, const TokenizedText& snippet_tokens,
                        const EmbeddingStore& store, const FeatureVec& extras,
                        BcnnTrace* trace) const {
  if (query_tokens.empty()) throw std::invalid_argument("bcnn: query has no tokens");
  if (snippet_tokens.empty()) throw std::invalid_argument("bcnn: snippet has no tokens");
  std::vector<std::string> snip = snippet_tokens.tokens;
  if (snip.size() > cfg_.max_snippet_tokens) snip.resize(cfg_.max_snippet_tokens);

  const Tensor q_seq = embed_sequence(query_tokens.tokens, store);
  const Tensor s_seq = embed_sequence(snip, store);
  const std::vector<std::uint8_t> q_mask(q_seq.shape()[0], 1);
  const std::vector<std::uint8_t> s_mask(s_seq.shape()[0], 1);

  BcnnStreamTrace* q_trace = trace != nullptr ? &trace->query : nullptr;
  BcnnStreamTrace* s_trace = trace != nullptr ? &trace->snippet : nullptr;
  const std::vector<Tensor> q_feats = stream_features(q_seq, q_mask, q_trace);
  const std::vector<Tensor> s_feats = stream_features(s_seq, s_mask, s_trace);

  Tensor z({cfg_.n_blocks + cfg_.n_extra});
  std::vector<double> sims(cfg_.n_blocks);
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    sims[b] = traced_cosine(q_feats[b], s_feats[b]);
    z[b] = sims[b];
  }
  for (std::size_t e = 0; e < cfg_.n_extra; ++e) z[cfg_.n_blocks + e] = extras[e];

  DenseTrace dense_trace;
  const Tensor out = dense_forward(z, logistic_w_, logistic_b_, Activation::linear,
                                   trace != nullptr ? &dense_trace : nullptr);
  if (trace != nullptr) {
    trace->sims = std::move(sims);
    trace->logistic_input = z;
    trace->logistic_trace = std::move(dense_trace);
  }
  return out[0];
}

double BcnnModel::bcnn_score(const TokenizedText& query_tokens,
                             const TokenizedText& snippet_tokens, const EmbeddingStore& store,
                             const FeatureVec& extras, BcnnTrace* trace) const {
  return sigmoid(logit(query_tokens, snippet_tokens, store, extras, trace));
}

void BcnnModel::backward(double d_logit, const BcnnTrace& trace) {
  Tensor d_out({1});
  d_out[0] = d_logit;
  const Tensor d_z = dense_backward(d_out, trace.logistic_trace, logistic_w_, logistic_b_);

  // Per-block feature gradients for both streams via the cosine partials.
  const std::size_t n_f = cfg_.n_filters;
  std::vector<Tensor> d_q_feat(cfg_.n_blocks, Tensor({n_f}));
  std::vector<Tensor> d_s_feat(cfg_.n_blocks, Tensor({n_f}));
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    traced_cosine_backward(d_z[b], trace.query.features[b], trace.snippet.features[b],
                           d_q_feat[b], d_s_feat[b]);
  }

  const auto stream_backward = [&](const BcnnStreamTrace& stream,
                                   const std::vector<Tensor>& d_feat) {
    const std::size_t t_len = stream.seq.shape()[0];
    std::size_t active = 0;
    for (const std::uint8_t m : stream.mask) active += (m != 0) ? 1 : 0;
    Tensor d_from_above;  // gradient flowing into the current block's output
    for (std::size_t bi = cfg_.n_blocks; bi-- > 0;) {
      Tensor d_block_out({t_len, n_f});
      if (d_from_above.size() != 0) d_block_out = d_from_above;
      // Feature mean: each unmasked row receives d_feat / active.
      for (std::size_t t = 0; t < t_len; ++t) {
        if (stream.mask[t] == 0) continue;
        for (std::size_t f = 0; f < n_f; ++f)
          d_block_out(t, f) += d_feat[bi][f] / static_cast<double>(active);
      }
      // Masked rows were overwritten with zeros in the forward pass.
      for (std::size_t t = 0; t < t_len; ++t) {
        if (stream.mask[t] != 0) continue;
        for (std::size_t f = 0; f < n_f; ++f) d_block_out(t, f) = 0.0;
      }
      d_from_above =
          conv_block_backward(d_block_out, stream.blocks[bi], cfg_.filter_width, filters_[bi]);
    }
    // d_from_above now holds the embedding gradient; embeddings are frozen.
  };
  stream_backward(trace.query, d_q_feat);
  stream_backward(trace.snippet, d_s_feat);
}

std::vector<Parameter*> BcnnModel::parameters() {
  std::vector<Parameter*> out;
  for (Parameter& p : filters_) out.push_back(&p);
  out.push_back(&logistic_w_);
  out.push_back(&logistic_b_);
  return out;
}

std::size_t BcnnModel::param_count() const {
  std::size_t n = 0;
  for (const Parameter& p : filters_) n += p.numel();
  return n + logistic_w_.numel() + logistic_b_.numel();
}

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

std::vector<SnippetCandidate> label_sentences(
    const Document& doc, const std::vector<std::pair<std::size_t, std::size_t>>& gold_spans,
    std::size_t max_snippet_tokens) {
  const std::string text = document_text(doc);
  for (const auto& [begin, end] : gold_spans) {
    if (begin >= end || end > text.size())
      throw std::runtime_error("label_sentences: gold span [" + std::to_string(begin) + ", " +
                               std::to_string(end) + ") out of bounds for document '" + doc.id +
                               "' of length " + std::to_string(text.size()));
  }
  std::vector<SnippetCandidate> out;
  const std::vector<SentenceSpan> sentences = split_sentences(text);
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    SnippetCandidate cand;
    cand.doc_id = doc.id;
    cand.sentence_index = i;
    cand.span = sentences[i];
    cand.tokens = tokenize(sentences[i].text);
    if (cand.tokens.size() > max_snippet_tokens) {
      cand.tokens.tokens.resize(max_snippet_tokens);
      cand.tokens.spans.resize(max_snippet_tokens);
    }
    int label = 0;
    for (const auto& [begin, end] : gold_spans) {
      if (sentences[i].start_char < end && begin < sentences[i].end_char) {
        label = 1;
        break;
      }
    }
    cand.label = label;
    out.push_back(std::move(cand));
  }
  return out;
}

std::vector<SnippetCandidate> rank_and_postprocess(std::vector<SnippetCandidate> candidates,
                                                   std::size_t k_s) {
  if (k_s == 0) throw std::invalid_argument("rank_and_postprocess: k_s must be positive");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SnippetCandidate& a, const SnippetCandidate& b) {
                     if (a.bcnn_score != b.bcnn_score) return a.bcnn_score > b.bcnn_score;
                     if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
                     return a.sentence_index < b.sentence_index;
                   });
  if (candidates.size() > k_s) candidates.resize(k_s);
  // Document-score post-processing: group the kept snippets under their
  // documents, best-scored document first.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SnippetCandidate& a, const SnippetCandidate& b) {
                     if (a.doc_score != b.doc_score) return a.doc_score > b.doc_score;
                     if (a.bcnn_score != b.bcnn_score) return a.bcnn_score > b.bcnn_score;
                     return a.sentence_index < b.sentence_index;
                   });
  return candidates;
}

}  // namespace bioir
