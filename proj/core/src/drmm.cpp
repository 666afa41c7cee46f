#include "bioir/drmm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace bioir {

void DrmmConfig::validate() const {
  if (n_buckets < 2) throw std::invalid_argument("DrmmConfig: n_buckets must be >= 2");
  if (mlp_hidden == 0 || mlp_layers == 0) throw std::invalid_argument("DrmmConfig: bad MLP size");
}

void AbelExtensionConfig::validate() const {
  if (l_w == 0) throw std::invalid_argument("AbelExtensionConfig: l_w must be >= 1");
  if (t_d == 0) throw std::invalid_argument("AbelExtensionConfig: t_d must be >= 1");
  if (t_c <= 0.0 || t_c >= 1.0) {
    throw std::invalid_argument("AbelExtensionConfig: t_c must lie in (0, 1)");
  }
}

Tensor cosine_histogram(const std::string& q_term, const std::vector<std::string>& doc_terms,
                        const EmbeddingStore& store, std::size_t n_buckets) {
  if (doc_terms.empty()) {
    throw std::invalid_argument("cosine_histogram: document has no terms");
  }
  if (n_buckets < 2) throw std::invalid_argument("cosine_histogram: need >= 2 buckets");
  const EmbeddingRef q = store.lookup(q_term);
  std::vector<std::size_t> counts(n_buckets, 0);
  const double width_inv = static_cast<double>(n_buckets) / 2.0;
  for (const std::string& d_term : doc_terms) {
    const EmbeddingRef d = store.lookup(d_term);
    const double c = cosine(q.values, d.values);
    // Bucket i covers [-1 + 2i/B, -1 + 2(i+1)/B); the last bucket is closed
    // at 1 and tiny rounding excursions beyond [-1, 1] are clamped.
    long long idx = static_cast<long long>(std::floor((c + 1.0) * width_inv));
    idx = std::max<long long>(0, std::min<long long>(idx, static_cast<long long>(n_buckets) - 1));
    counts[static_cast<std::size_t>(idx)] += 1;
  }
  Tensor out({n_buckets});
  for (std::size_t i = 0; i < n_buckets; ++i) {
    out[i] = std::log(1.0 + static_cast<double>(counts[i]));
  }
  return out;
}

std::vector<double> gate_weights(const std::vector<std::string>& query_terms,
                                 const EmbeddingStore& store, const Parameter& w_g,
                                 GatingTrace* trace) {
  if (query_terms.empty()) throw std::invalid_argument("gate_weights: empty query");
  const std::size_t dim = store.dim();
  if (w_g.value.rank() != 1 || w_g.value.dim(0) != dim + 1) {
    throw std::invalid_argument("gate_weights: w_g is " + w_g.value.shape_string() +
                                ", expected [" + std::to_string(dim + 1) + "]");
  }
  std::vector<double> logits(query_terms.size(), 0.0);
  std::vector<Tensor> phi_g;
  phi_g.reserve(query_terms.size());
  for (std::size_t i = 0; i < query_terms.size(); ++i) {
    Tensor phi({dim + 1});
    const EmbeddingRef e = store.lookup(query_terms[i]);
    for (std::size_t d = 0; d < dim; ++d) phi[d] = e.values[d];
    phi[dim] = store.idf_of(query_terms[i]);
    double dot = 0.0;
    for (std::size_t d = 0; d < dim + 1; ++d) dot += w_g.value[d] * phi[d];
    logits[i] = dot;
    phi_g.push_back(std::move(phi));
  }
  const std::vector<std::uint8_t> active(query_terms.size(), 1);
  std::vector<double> weights = masked_softmax(logits, active);
  if (trace != nullptr) {
    trace->phi_g = std::move(phi_g);
    trace->weights = weights;
  }
  return weights;
}

void gate_weights_backward(std::span<const double> d_weights, const GatingTrace& trace,
                           Parameter& w_g) {
  const std::vector<std::uint8_t> active(trace.weights.size(), 1);
  const std::vector<double> d_logits =
      masked_softmax_backward(trace.weights, d_weights, active);
  for (std::size_t i = 0; i < d_logits.size(); ++i) {
    const Tensor& phi = trace.phi_g[i];
    for (std::size_t d = 0; d < phi.size(); ++d) w_g.grad[d] += d_logits[i] * phi[d];
  }
}

ContextEncoderParams::ContextEncoderParams(const std::string& prefix, std::size_t dim)
    : W_c(prefix + ".W_c", Tensor({dim, 3 * dim})), b_c(prefix + ".b_c", Tensor({dim})) {}

std::vector<Tensor> context_encode(const std::vector<std::string>& tokens,
                                   const EmbeddingStore& store,
                                   const ContextEncoderParams& params, ContextTrace* trace) {
  if (tokens.empty()) throw std::invalid_argument("context_encode: empty token list");
  const std::size_t dim = store.dim();
  if (params.W_c.value.rank() != 2 || params.W_c.value.dim(0) != dim ||
      params.W_c.value.dim(1) != 3 * dim || params.b_c.value.dim(0) != dim) {
    throw std::invalid_argument("context_encode: parameter shapes do not match dim " +
                                std::to_string(dim));
  }
  if (trace != nullptr) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  std::vector<Tensor> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Tensor phi({3 * dim});  // [e(prev); e(cur); e(next)], zeros at boundaries
    const EmbeddingRef cur = store.lookup(tokens[i]);
    if (i > 0) {
      const EmbeddingRef prev = store.lookup(tokens[i - 1]);
      for (std::size_t d = 0; d < dim; ++d) phi[d] = prev.values[d];
    }
    for (std::size_t d = 0; d < dim; ++d) phi[dim + d] = cur.values[d];
    if (i + 1 < tokens.size()) {
      const EmbeddingRef next = store.lookup(tokens[i + 1]);
      for (std::size_t d = 0; d < dim; ++d) phi[2 * dim + d] = next.values[d];
    }
    Tensor pre({dim});
    for (std::size_t r = 0; r < dim; ++r) {
      double acc = params.b_c.value[r];
      for (std::size_t c = 0; c < 3 * dim; ++c) acc += params.W_c.value(r, c) * phi[c];
      pre[r] = acc;
    }
    Tensor ctx({dim});
    for (std::size_t r = 0; r < dim; ++r) {
      ctx[r] = apply_activation(Activation::leaky_relu, pre[r]) + cur.values[r];
    }
    if (trace != nullptr) {
      trace->inputs.push_back(std::move(phi));
      trace->pre.push_back(pre);
    }
    out.push_back(std::move(ctx));
  }
  return out;
}

void context_encode_backward(const std::vector<Tensor>& d_ctx, const ContextTrace& trace,
                             ContextEncoderParams& params) {
  if (d_ctx.size() != trace.pre.size()) {
    throw std::invalid_argument("context_encode_backward: gradient count mismatch");
  }
  const std::size_t dim = params.b_c.value.dim(0);
  for (std::size_t i = 0; i < d_ctx.size(); ++i) {
    const Tensor& phi = trace.inputs[i];
    for (std::size_t r = 0; r < dim; ++r) {
      const double d_pre =
          d_ctx[i][r] * activation_grad(Activation::leaky_relu, trace.pre[i][r]);
      if (d_pre == 0.0) continue;
      params.b_c.grad[r] += d_pre;
      for (std::size_t c = 0; c < 3 * dim; ++c) {
        params.W_c.grad(r, c) += d_pre * phi[c];
      }
    }
  }
}

Tensor abel_qterm_encoding(const Tensor& q_ctx_i, const std::vector<Tensor>& doc_ctx,
                           std::span<const std::uint8_t> d_mask, AbelQtermTrace* trace) {
  if (doc_ctx.empty()) throw std::invalid_argument("abel_qterm_encoding: empty document");
  if (d_mask.size() != doc_ctx.size()) {
    throw std::invalid_argument("abel_qterm_encoding: mask length mismatch");
  }
  const std::size_t dim = q_ctx_i.dim(0);
  std::vector<double> scores(doc_ctx.size(), 0.0);
  for (std::size_t j = 0; j < doc_ctx.size(); ++j) {
    if (d_mask[j] == 0) continue;
    double dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dot += q_ctx_i[d] * doc_ctx[j][d];
    scores[j] = dot;
  }
  bool any = false;
  for (const std::uint8_t m : d_mask) any = any || m != 0;
  if (!any) throw std::invalid_argument("abel_qterm_encoding: every d-term is masked");
  const std::vector<double> att = masked_softmax(scores, d_mask);

  Tensor d_rep({dim});
  for (std::size_t j = 0; j < doc_ctx.size(); ++j) {
    if (d_mask[j] == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) d_rep[d] += att[j] * doc_ctx[j][d];
  }
  Tensor phi_h({dim});
  for (std::size_t d = 0; d < dim; ++d) phi_h[d] = d_rep[d] * q_ctx_i[d];
  if (trace != nullptr) {
    trace->att_weights = att;
    trace->q_ctx = q_ctx_i;
    trace->d_rep = d_rep;
  }
  return phi_h;
}

Tensor abel_qterm_encoding(std::size_t q_index, const std::vector<Tensor>& query_ctx,
                           const std::vector<Tensor>& doc_ctx,
                           std::span<const std::uint8_t> d_mask, AbelQtermTrace* trace) {
  return abel_qterm_encoding(query_ctx.at(q_index), doc_ctx, d_mask, trace);
}

Tensor abel_qterm_encoding_backward(const Tensor& d_phi_h, const AbelQtermTrace& trace,
                                    const std::vector<Tensor>& doc_ctx,
                                    std::span<const std::uint8_t> d_mask,
                                    std::vector<Tensor>& d_doc_ctx) {
  const std::size_t dim = d_phi_h.dim(0);
  Tensor d_q({dim});
  Tensor d_rep_grad({dim});
  // phi_h = d_rep (Hadamard) q_ctx
  for (std::size_t d = 0; d < dim; ++d) {
    d_rep_grad[d] = d_phi_h[d] * trace.q_ctx[d];
    d_q[d] = d_phi_h[d] * trace.d_rep[d];
  }
  // d_rep = sum_j att_j c(d_j)
  std::vector<double> d_att(doc_ctx.size(), 0.0);
  for (std::size_t j = 0; j < doc_ctx.size(); ++j) {
    if (d_mask[j] == 0) continue;
    double dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      dot += d_rep_grad[d] * doc_ctx[j][d];
      d_doc_ctx[j][d] += trace.att_weights[j] * d_rep_grad[d];
    }
    d_att[j] = dot;
  }
  // att = masked softmax of scores; scores_j = q_ctx . c(d_j)
  const std::vector<double> d_scores =
      masked_softmax_backward(trace.att_weights, d_att, d_mask);
  for (std::size_t j = 0; j < doc_ctx.size(); ++j) {
    if (d_mask[j] == 0 || d_scores[j] == 0.0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      d_q[d] += d_scores[j] * doc_ctx[j][d];
      d_doc_ctx[j][d] += d_scores[j] * trace.q_ctx[d];
    }
  }
  return d_q;
}

// ---------------------------------------------------------------------------
// DRMM
// ---------------------------------------------------------------------------

DrmmModel::DrmmModel(DrmmConfig cfg, std::size_t embedding_dim, std::uint64_t seed)
    : cfg_(cfg),
      w_g_("drmm.gate.w_g", Tensor({embedding_dim + 1})),
      final_w_("drmm.final.weight", Tensor({std::size_t{1}, 1 + cfg.n_extra})),
      final_b_("drmm.final.bias", Tensor({std::size_t{1}})) {
  cfg_.validate();
  Rng rng(seed);
  mlp_ = Mlp::make("drmm.mlp", cfg_.n_buckets, cfg_.mlp_hidden, cfg_.mlp_layers,
                   Activation::leaky_relu, rng);
  init_uniform_fan(w_g_, embedding_dim + 1, 1, rng);
  init_uniform_fan(final_w_, 1 + cfg_.n_extra, 1, rng);
}

double DrmmModel::score(const TokenizedText& query, const TokenizedText& doc,
                        const EmbeddingStore& store, const FeatureVec& extras,
                        DrmmTrace* trace) const {
  if (query.empty()) throw std::invalid_argument("DrmmModel::score: empty query");
  if (doc.empty()) throw std::invalid_argument("DrmmModel::score: empty document");
  const std::size_t n_q = query.size();
  if (trace != nullptr) {
    trace->mlp_traces.assign(n_q, {});
    trace->term_scores.assign(n_q, 0.0);
  }
  std::vector<double> term_scores(n_q, 0.0);
  for (std::size_t i = 0; i < n_q; ++i) {
    const Tensor hist = cosine_histogram(query.tokens[i], doc.tokens, store, cfg_.n_buckets);
    term_scores[i] =
        mlp_.forward(hist, trace != nullptr ? &trace->mlp_traces[i] : nullptr);
  }
  const std::vector<double> gates =
      gate_weights(query.tokens, store, w_g_, trace != nullptr ? &trace->gating : nullptr);
  double deep = 0.0;
  for (std::size_t i = 0; i < n_q; ++i) deep += gates[i] * term_scores[i];

  Tensor final_input({1 + cfg_.n_extra});
  final_input[0] = deep;
  for (std::size_t e = 0; e < cfg_.n_extra; ++e) final_input[1 + e] = extras[e];
  DenseTrace local;
  const Tensor out = dense_forward(final_input, final_w_, final_b_, Activation::linear,
                                   trace != nullptr ? &trace->final_trace : &local);
  if (trace != nullptr) {
    trace->term_scores = term_scores;
    trace->final_input = final_input;
  }
  return out[0];
}

void DrmmModel::backward(double d_score, const DrmmTrace& trace) {
  Tensor d_out({std::size_t{1}});
  d_out[0] = d_score;
  const Tensor d_final = dense_backward(d_out, trace.final_trace, final_w_, final_b_);
  const double d_deep = d_final[0];

  const std::size_t n_q = trace.term_scores.size();
  std::vector<double> d_gates(n_q, 0.0);
  for (std::size_t i = 0; i < n_q; ++i) {
    d_gates[i] = d_deep * trace.term_scores[i];
    const double d_term = d_deep * trace.gating.weights[i];
    mlp_.backward(d_term, trace.mlp_traces[i]);  // histogram input is frozen
  }
  gate_weights_backward(d_gates, trace.gating, w_g_);
}

std::vector<Parameter*> DrmmModel::parameters() {
  std::vector<Parameter*> out;
  mlp_.collect(out);
  out.push_back(&w_g_);
  out.push_back(&final_w_);
  out.push_back(&final_b_);
  return out;
}

std::size_t DrmmModel::param_count() const {
  return mlp_.param_count() + w_g_.value.size() + final_w_.value.size() + final_b_.value.size();
}

// ---------------------------------------------------------------------------
// ABEL-DRMM
// ---------------------------------------------------------------------------

AbelDrmmModel::AbelDrmmModel(DrmmConfig cfg, std::size_t embedding_dim, std::uint64_t seed)
    : cfg_(cfg),
      dim_(embedding_dim),
      ctx_("abel.ctx", embedding_dim),
      w_g_("abel.gate.w_g", Tensor({embedding_dim + 1})),
      final_w_("abel.final.weight", Tensor({std::size_t{1}, 1 + cfg.n_extra})),
      final_b_("abel.final.bias", Tensor({std::size_t{1}})) {
  cfg_.validate();
  if (embedding_dim == 0) throw std::invalid_argument("AbelDrmmModel: zero embedding dim");
  Rng rng(seed);
  init_uniform_fan(ctx_.W_c, 3 * embedding_dim, embedding_dim, rng);
  mlp_ = Mlp::make("abel.mlp", embedding_dim, cfg_.mlp_hidden, cfg_.mlp_layers,
                   Activation::leaky_relu, rng);
  init_uniform_fan(w_g_, embedding_dim + 1, 1, rng);
  init_uniform_fan(final_w_, 1 + cfg_.n_extra, 1, rng);
}

double AbelDrmmModel::score_tokens(const std::vector<std::string>& q_tokens,
                                   const std::vector<std::string>& d_tokens,
                                   const EmbeddingStore& store, const FeatureVec& extras,
                                   AbelTrace* trace) const {
  if (q_tokens.empty()) throw std::invalid_argument("abel_drmm_score: empty query");
  if (d_tokens.empty()) throw std::invalid_argument("abel_drmm_score: empty document");

  std::vector<std::uint8_t> d_mask(d_tokens.size(), 0);
  bool any = false;
  for (std::size_t j = 0; j < d_tokens.size(); ++j) {
    d_mask[j] = store.lookup(d_tokens[j]).oov ? 0 : 1;
    any = any || d_mask[j] != 0;
  }
  if (!any) {
    throw std::invalid_argument(
        "abel_drmm_score: every document term is out of vocabulary");
  }

  ContextTrace q_ct, d_ct;
  const std::vector<Tensor> q_ctx =
      context_encode(q_tokens, store, ctx_, trace != nullptr ? &q_ct : nullptr);
  const std::vector<Tensor> d_ctx =
      context_encode(d_tokens, store, ctx_, trace != nullptr ? &d_ct : nullptr);

  const std::size_t n_q = q_tokens.size();
  std::vector<double> term_scores(n_q, 0.0);
  std::vector<AbelQtermTrace> qterm_traces(trace != nullptr ? n_q : 0);
  std::vector<std::vector<DenseTrace>> mlp_traces(trace != nullptr ? n_q : 0);
  for (std::size_t i = 0; i < n_q; ++i) {
    const Tensor phi_h = abel_qterm_encoding(
        q_ctx[i], d_ctx, d_mask, trace != nullptr ? &qterm_traces[i] : nullptr);
    term_scores[i] = mlp_.forward(phi_h, trace != nullptr ? &mlp_traces[i] : nullptr);
  }

  GatingTrace gating;
  const std::vector<double> gates =
      gate_weights(q_tokens, store, w_g_, trace != nullptr ? &gating : nullptr);
  double deep = 0.0;
  for (std::size_t i = 0; i < n_q; ++i) deep += gates[i] * term_scores[i];

  Tensor final_input({1 + cfg_.n_extra});
  final_input[0] = deep;
  for (std::size_t e = 0; e < cfg_.n_extra; ++e) final_input[1 + e] = extras[e];
  DenseTrace final_trace;
  const Tensor out =
      dense_forward(final_input, final_w_, final_b_, Activation::linear, &final_trace);

  if (trace != nullptr) {
    trace->q_ctx_trace = std::move(q_ct);
    trace->d_ctx_trace = std::move(d_ct);
    trace->q_ctx = q_ctx;
    trace->d_ctx = d_ctx;
    trace->d_mask = std::move(d_mask);
    trace->qterm_traces = std::move(qterm_traces);
    trace->mlp_traces = std::move(mlp_traces);
    trace->term_scores = term_scores;
    trace->gating = std::move(gating);
    trace->final_input = final_input;
    trace->final_trace = final_trace;
  }
  return out[0];
}

double AbelDrmmModel::score(const TokenizedText& query, const TokenizedText& doc,
                            const EmbeddingStore& store, const FeatureVec& extras,
                            AbelTrace* trace) const {
  return score_tokens(query.tokens, doc.tokens, store, extras, trace);
}

void AbelDrmmModel::backward(double d_score, const AbelTrace& trace) {
  Tensor d_out({std::size_t{1}});
  d_out[0] = d_score;
  const Tensor d_final = dense_backward(d_out, trace.final_trace, final_w_, final_b_);
  const double d_deep = d_final[0];

  const std::size_t n_q = trace.term_scores.size();
  const std::size_t n_d = trace.d_ctx.size();
  std::vector<double> d_gates(n_q, 0.0);
  std::vector<Tensor> d_q_ctx(n_q, Tensor({dim_}));
  std::vector<Tensor> d_d_ctx(n_d, Tensor({dim_}));
  for (std::size_t i = 0; i < n_q; ++i) {
    d_gates[i] = d_deep * trace.term_scores[i];
    const double d_term = d_deep * trace.gating.weights[i];
    const Tensor d_phi_h = mlp_.backward(d_term, trace.mlp_traces[i]);
    d_q_ctx[i] = abel_qterm_encoding_backward(d_phi_h, trace.qterm_traces[i], trace.d_ctx,
                                              trace.d_mask, d_d_ctx);
  }
  gate_weights_backward(d_gates, trace.gating, w_g_);
  context_encode_backward(d_q_ctx, trace.q_ctx_trace, ctx_);
  context_encode_backward(d_d_ctx, trace.d_ctx_trace, ctx_);
}

double AbelDrmmModel::density_score(const TokenizedText& query, const TokenizedText& doc,
                                    const EmbeddingStore& store, const FeatureVec& extras,
                                    std::size_t l_w, DensityTrace* trace) const {
  if (l_w == 0) throw std::invalid_argument("density_score: l_w must be >= 1");
  const double base =
      score_tokens(query.tokens, doc.tokens, store, extras, trace != nullptr ? &trace->base : nullptr);

  const std::size_t len = doc.size();
  const std::size_t window_len = std::min(len, l_w);
  const std::size_t n_windows = len - window_len + 1;

  double best = 0.0;
  std::size_t best_start = 0;
  bool found = false;
  for (std::size_t start = 0; start < n_windows; ++start) {
    const std::vector<std::string> window(doc.tokens.begin() + start,
                                          doc.tokens.begin() + start + window_len);
    bool in_vocab = false;
    for (const std::string& t : window) in_vocab = in_vocab || !store.lookup(t).oov;
    if (!in_vocab) continue;  // unscorable window (attention has no targets)
    const double s = score_tokens(query.tokens, window, store, extras, nullptr);
    if (!found || s > best) {
      best = s;
      best_start = start;
      found = true;
    }
  }
  if (!found) {
    // score_tokens above would have thrown already; defensive.
    throw std::invalid_argument("density_score: no scorable window");
  }
  if (trace != nullptr) {
    const std::vector<std::string> window(doc.tokens.begin() + best_start,
                                          doc.tokens.begin() + best_start + window_len);
    (void)score_tokens(query.tokens, window, store, extras, &trace->window);
    trace->window_start = best_start;
    trace->window_len = window_len;
  }
  return base + best;
}

void AbelDrmmModel::density_backward(double d_score, const DensityTrace& trace) {
  backward(d_score, trace.base);
  backward(d_score, trace.window);
}

std::vector<Parameter*> AbelDrmmModel::parameters() {
  std::vector<Parameter*> out;
  out.push_back(&ctx_.W_c);
  out.push_back(&ctx_.b_c);
  mlp_.collect(out);
  out.push_back(&w_g_);
  out.push_back(&final_w_);
  out.push_back(&final_b_);
  return out;
}

std::size_t AbelDrmmModel::param_count() const {
  return ctx_.W_c.value.size() + ctx_.b_c.value.size() + mlp_.param_count() +
         w_g_.value.size() + final_w_.value.size() + final_b_.value.size();
}

RankedList confidence_filter(const RankedList& scored_docs, const AbelExtensionConfig& cfg) {
  cfg.validate();
  if (scored_docs.empty()) return {};
  const std::size_t m = std::min<std::size_t>(cfg.t_d, scored_docs.size());
  std::vector<double> scores(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) scores[i] = scored_docs[i].score;
  const std::vector<std::uint8_t> active(m, 1);
  const std::vector<double> probs = masked_softmax(scores, active);
  RankedList kept;
  for (std::size_t i = 0; i < m; ++i) {
    if (probs[i] > cfg.t_c) kept.push_back(scored_docs[i]);
  }
  if (kept.empty()) {
    std::cerr << "confidence_filter: no document exceeded t_c=" << cfg.t_c
              << " (degenerate near-uniform scores); returning an empty list\n";
  }
  return kept;
}

}  // namespace bioir
