#include "bioir/pacrr.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace bioir {

void PacrrConfig::validate() const {
  if (l_q == 0 || l_d == 0) throw std::invalid_argument("PacrrConfig: l_q and l_d must be >= 1");
  if (l_g < 2) throw std::invalid_argument("PacrrConfig: l_g must be >= 2");
  if (k == 0) throw std::invalid_argument("PacrrConfig: k must be >= 1");
  if (filters_per_size == 0) throw std::invalid_argument("PacrrConfig: need >= 1 filter per size");
  if (mlp_hidden == 0 || mlp_layers == 0) throw std::invalid_argument("PacrrConfig: bad MLP size");
}

SimMatrix build_sim_matrix(const TokenizedText& query, const TokenizedText& doc,
                           const EmbeddingStore& store, const PacrrConfig& cfg) {
  if (query.empty()) {
    throw std::invalid_argument("build_sim_matrix: query has no tokens");
  }
  SimMatrix sim;
  sim.values = Tensor({cfg.l_q, cfg.l_d});
  sim.q_mask.assign(cfg.l_q, 0);
  sim.d_mask.assign(cfg.l_d, 0);
  const std::size_t n_q = std::min(query.size(), cfg.l_q);
  const std::size_t n_d = std::min(doc.size(), cfg.l_d);

  std::vector<EmbeddingRef> q_vecs(n_q), d_vecs(n_d);
  for (std::size_t i = 0; i < n_q; ++i) {
    q_vecs[i] = store.lookup(query.tokens[i]);
    sim.q_mask[i] = q_vecs[i].oov ? 0 : 1;
  }
  for (std::size_t j = 0; j < n_d; ++j) {
    d_vecs[j] = store.lookup(doc.tokens[j]);
    sim.d_mask[j] = d_vecs[j].oov ? 0 : 1;
  }
  for (std::size_t i = 0; i < n_q; ++i) {
    if (sim.q_mask[i] == 0) continue;  // OOV rows stay exactly 0
    for (std::size_t j = 0; j < n_d; ++j) {
      if (sim.d_mask[j] == 0) continue;
      sim.values(i, j) = cosine(q_vecs[i].values, d_vecs[j].values);
    }
  }
  return sim;
}

std::vector<double> query_idf_logits(const TokenizedText& query, const EmbeddingStore& store,
                                     std::size_t l_q) {
  std::vector<double> logits(l_q, 0.0);
  const std::size_t n_q = std::min(query.size(), l_q);
  for (std::size_t i = 0; i < n_q; ++i) logits[i] = store.idf_of(query.tokens[i]);
  return logits;
}

PacrrModel::PacrrModel(PacrrConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      agg_w_("pacrr.agg.weight", Tensor({std::size_t{1}, cfg.l_q + cfg.n_extra})),
      agg_b_("pacrr.agg.bias", Tensor({std::size_t{1}})) {
  cfg_.validate();
  Rng rng(seed);
  for (std::size_t n = 2; n <= cfg_.l_g; ++n) {
    conv_filters_.emplace_back("pacrr.conv" + std::to_string(n) + ".filters",
                               Tensor({cfg_.filters_per_size, n, n}));
    init_uniform_fan(conv_filters_.back(), n * n, n * n, rng);
  }
  const std::size_t mlp_in = cfg_.head == PacrrConfig::Head::per_term_mlp
                                 ? cfg_.row_width()
                                 : cfg_.l_q * cfg_.row_width() + cfg_.n_extra;
  mlp_ = Mlp::make("pacrr.mlp", mlp_in, cfg_.mlp_hidden, cfg_.mlp_layers, Activation::relu, rng);
  if (cfg_.head == PacrrConfig::Head::per_term_mlp) {
    init_uniform_fan(agg_w_, cfg_.l_q + cfg_.n_extra, 1, rng);
  }
}

Tensor PacrrModel::doc_encodings(const SimMatrix& sim, std::span<const double> idf_logits,
                                 PacrrTrace* trace) const {
  if (sim.values.rank() != 2 || sim.values.dim(0) != cfg_.l_q || sim.values.dim(1) != cfg_.l_d) {
    throw std::invalid_argument("doc_encodings: sim matrix is " + sim.values.shape_string() +
                                ", config expects [" + std::to_string(cfg_.l_q) + ", " +
                                std::to_string(cfg_.l_d) + "]");
  }
  if (idf_logits.size() != cfg_.l_q) {
    throw std::invalid_argument("doc_encodings: idf logits length mismatch");
  }
  const std::size_t width = cfg_.row_width();
  const std::size_t n_sizes = cfg_.l_g - 1;
  Tensor encodings({cfg_.l_q, width});
  if (trace != nullptr) {
    trace->conv_traces.assign(n_sizes, Conv2dTrace{});
    trace->max_traces.assign(n_sizes, MaxFilterTrace{});
    trace->kmax_indices.assign(n_sizes, {});
    trace->raw_kmax_indices.clear();
    trace->q_mask = sim.q_mask;
  }

  for (std::size_t s = 0; s < n_sizes; ++s) {
    const std::size_t n = s + 2;
    // Re-align: pad n-1 zero columns (right) and rows (bottom) so the valid
    // convolution keeps one output row per q-term and one column per d-term.
    Tensor padded({cfg_.l_q + n - 1, cfg_.l_d + n - 1});
    for (std::size_t i = 0; i < cfg_.l_q; ++i) {
      for (std::size_t j = 0; j < cfg_.l_d; ++j) padded(i, j) = sim.values(i, j);
    }
    Conv2dTrace local_conv;
    Tensor maps = conv2d_valid(padded, conv_filters_[s],
                               trace != nullptr ? &trace->conv_traces[s] : &local_conv);
    MaxFilterTrace local_max;
    Tensor pooled = max_over_filters(maps, trace != nullptr ? &trace->max_traces[s] : &local_max);
    if (trace != nullptr) trace->kmax_indices[s].assign(cfg_.l_q, {});
    const std::span<const double> pooled_flat = std::as_const(pooled).flat();
    for (std::size_t i = 0; i < cfg_.l_q; ++i) {
      std::vector<std::size_t> picked;
      const std::vector<double> top =
          kmax_pool(pooled_flat.subspan(i * cfg_.l_d, cfg_.l_d), cfg_.k, &picked);
      for (std::size_t t = 0; t < cfg_.k; ++t) encodings(i, s * cfg_.k + t) = top[t];
      if (trace != nullptr) trace->kmax_indices[s][i] = std::move(picked);
    }
  }

  const std::size_t raw_offset = n_sizes * cfg_.k;
  if (trace != nullptr) trace->raw_kmax_indices.assign(cfg_.l_q, {});
  const std::span<const double> sim_flat = sim.values.flat();
  for (std::size_t i = 0; i < cfg_.l_q; ++i) {
    std::vector<std::size_t> picked;
    const std::vector<double> top =
        kmax_pool(sim_flat.subspan(i * cfg_.l_d, cfg_.l_d), cfg_.k, &picked);
    for (std::size_t t = 0; t < cfg_.k; ++t) encodings(i, raw_offset + t) = top[t];
    if (trace != nullptr) trace->raw_kmax_indices[i] = std::move(picked);
  }

  const std::vector<double> idf_softmax =
      masked_softmax(idf_logits, std::span<const std::uint8_t>(sim.q_mask));
  for (std::size_t i = 0; i < cfg_.l_q; ++i) encodings(i, width - 1) = idf_softmax[i];

  if (trace != nullptr) trace->encodings = encodings;
  return encodings;
}

double PacrrModel::term_pacrr_score(const Tensor& encodings,
                                    std::span<const std::uint8_t> q_mask,
                                    const FeatureVec& extras, PacrrTrace* trace) const {
  if (cfg_.head != PacrrConfig::Head::per_term_mlp) {
    throw std::logic_error("term_pacrr_score: model was built with the concat head");
  }
  if (q_mask.size() != cfg_.l_q) {
    throw std::invalid_argument("term_pacrr_score: q_mask length mismatch");
  }
  Tensor agg_input({cfg_.l_q + cfg_.n_extra});
  if (trace != nullptr) trace->per_term_traces.assign(cfg_.l_q, {});
  for (std::size_t i = 0; i < cfg_.l_q; ++i) {
    if (q_mask[i] == 0) continue;  // masked rows contribute exactly 0
    Tensor row({cfg_.row_width()});
    for (std::size_t c = 0; c < cfg_.row_width(); ++c) row[c] = encodings(i, c);
    agg_input[i] =
        mlp_.forward(row, trace != nullptr ? &trace->per_term_traces[i] : nullptr);
  }
  for (std::size_t e = 0; e < cfg_.n_extra; ++e) agg_input[cfg_.l_q + e] = extras[e];

  DenseTrace local;
  const Tensor out = dense_forward(agg_input, agg_w_, agg_b_, Activation::linear,
                                   trace != nullptr ? &trace->agg_trace : &local);
  if (trace != nullptr) trace->agg_input = agg_input;
  return out[0];
}

double PacrrModel::pacrr_score(const Tensor& encodings, const FeatureVec& extras,
                               PacrrTrace* trace) const {
  if (cfg_.head != PacrrConfig::Head::concat_mlp) {
    throw std::logic_error("pacrr_score: model was built with the per-term head");
  }
  const std::size_t width = cfg_.row_width();
  Tensor x({cfg_.l_q * width + cfg_.n_extra});
  for (std::size_t i = 0; i < cfg_.l_q; ++i) {
    for (std::size_t c = 0; c < width; ++c) x[i * width + c] = encodings(i, c);
  }
  for (std::size_t e = 0; e < cfg_.n_extra; ++e) x[cfg_.l_q * width + e] = extras[e];
  return mlp_.forward(x, trace != nullptr ? &trace->concat_traces : nullptr);
}

double PacrrModel::score(const SimMatrix& sim, std::span<const double> idf_logits,
                         const FeatureVec& extras, PacrrTrace* trace) const {
  const Tensor encodings = doc_encodings(sim, idf_logits, trace);
  if (cfg_.head == PacrrConfig::Head::per_term_mlp) {
    return term_pacrr_score(encodings, std::span<const std::uint8_t>(sim.q_mask), extras, trace);
  }
  return pacrr_score(encodings, extras, trace);
}

void PacrrModel::backward(double d_score, const PacrrTrace& trace) {
  const std::size_t width = cfg_.row_width();
  Tensor d_encodings({cfg_.l_q, width});

  if (cfg_.head == PacrrConfig::Head::per_term_mlp) {
    Tensor d_out({std::size_t{1}});
    d_out[0] = d_score;
    const Tensor d_agg = dense_backward(d_out, trace.agg_trace, agg_w_, agg_b_);
    for (std::size_t i = 0; i < cfg_.l_q; ++i) {
      if (trace.q_mask[i] == 0) continue;
      const Tensor d_row = mlp_.backward(d_agg[i], trace.per_term_traces[i]);
      for (std::size_t c = 0; c < width; ++c) d_encodings(i, c) = d_row[c];
    }
  } else {
    const Tensor d_concat = mlp_.backward(d_score, trace.concat_traces);
    for (std::size_t i = 0; i < cfg_.l_q; ++i) {
      for (std::size_t c = 0; c < width; ++c) d_encodings(i, c) = d_concat[i * width + c];
    }
  }
  encodings_backward(d_encodings, trace);
}

void PacrrModel::encodings_backward(const Tensor& d_encodings, const PacrrTrace& trace) {
  // The idf slot and the raw-sim (n=1) block depend only on frozen inputs;
  // gradients flow into the convolution filters alone.
  const std::size_t n_sizes = cfg_.l_g - 1;
  for (std::size_t s = 0; s < n_sizes; ++s) {
    Tensor d_pooled({cfg_.l_q, cfg_.l_d});
    bool any = false;
    for (std::size_t i = 0; i < cfg_.l_q; ++i) {
      const auto& picked = trace.kmax_indices[s][i];
      for (std::size_t t = 0; t < picked.size(); ++t) {
        const double g = d_encodings(i, s * cfg_.k + t);
        if (g != 0.0) any = true;
        d_pooled(i, picked[t]) += g;
      }
    }
    if (!any) continue;
    const Tensor d_maps = max_over_filters_backward(d_pooled, trace.max_traces[s]);
    conv2d_backward(d_maps, trace.conv_traces[s], conv_filters_[s]);
  }
}

std::vector<Parameter*> PacrrModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& f : conv_filters_) out.push_back(&f);
  mlp_.collect(out);
  if (cfg_.head == PacrrConfig::Head::per_term_mlp) {
    out.push_back(&agg_w_);
    out.push_back(&agg_b_);
  }
  return out;
}

std::size_t PacrrModel::param_count() const {
  std::size_t n = 0;
  for (const auto& f : conv_filters_) n += f.value.size();
  n += mlp_.param_count();
  if (cfg_.head == PacrrConfig::Head::per_term_mlp) {
    n += agg_w_.value.size() + agg_b_.value.size();
  }
  return n;
}

}  // namespace bioir
