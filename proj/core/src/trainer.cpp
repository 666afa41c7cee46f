#include "bioir/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace bioir {

// ---------------------------------------------------------------------------
// Published configurations
// ---------------------------------------------------------------------------

TrainConfig default_train_config(RerankerKind kind) {
  TrainConfig cfg;
  cfg.batch_size = 32;
  switch (kind) {
    case RerankerKind::drmm:
    case RerankerKind::abel_drmm:
    case RerankerKind::abel_density:
    case RerankerKind::abel_density_confidence:
      cfg.loss = TrainConfig::Loss::hinge;
      cfg.margin = 1.0;
      break;
    case RerankerKind::term_pacrr:
    case RerankerKind::pacrr:
      cfg.loss = TrainConfig::Loss::binary_log;
      break;
  }
  return cfg;
}

OptimizerConfig default_optimizer_config(RerankerKind kind) {
  OptimizerConfig cfg;
  cfg.kind = OptimizerConfig::Kind::adam;
  switch (kind) {
    case RerankerKind::drmm:
    case RerankerKind::abel_drmm:
    case RerankerKind::abel_density:
    case RerankerKind::abel_density_confidence:
      cfg.learning_rate = 0.01;
      break;
    case RerankerKind::term_pacrr:
    case RerankerKind::pacrr:
      cfg.learning_rate = 0.001;
      break;
  }
  return cfg;
}

TrainConfig default_bcnn_train_config() {
  TrainConfig cfg;
  cfg.loss = TrainConfig::Loss::binary_log;
  cfg.batch_size = 200;
  return cfg;
}

OptimizerConfig default_bcnn_optimizer_config() {
  OptimizerConfig cfg;
  cfg.kind = OptimizerConfig::Kind::adagrad;
  cfg.learning_rate = 0.08;
  cfg.l2_lambda = 0.0004;
  return cfg;
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace {

std::string parameter_norms(std::span<Parameter* const> params) {
  std::ostringstream out;
  for (const Parameter* p : params) {
    double sq = 0.0;
    for (const double v : p->value.flat()) sq += v * v;
    out << " " << p->name << "=" << std::sqrt(sq);
  }
  return out.str();
}

[[noreturn]] void abort_non_finite(double loss, std::size_t epoch, std::size_t batch,
                                   std::span<Parameter* const> params) {
  std::ostringstream msg;
  msg << "training aborted: non-finite loss " << loss << " at epoch " << epoch << ", batch "
      << batch << "; parameter norms:" << parameter_norms(params);
  throw std::runtime_error(msg.str());
}

double pair_loss(const TrainConfig& cfg, double s_pos, double s_neg) {
  if (cfg.loss == TrainConfig::Loss::hinge) return hinge_pair_loss(s_pos, s_neg, cfg.margin);
  return binary_log_pair_loss(s_pos, s_neg);
}

PairGrad pair_grad(const TrainConfig& cfg, double s_pos, double s_neg) {
  if (cfg.loss == TrainConfig::Loss::hinge) return hinge_pair_grad(s_pos, s_neg, cfg.margin);
  return binary_log_pair_grad(s_pos, s_neg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Document reranker training
// ---------------------------------------------------------------------------

double dev_map10_doc(const DocRanker& ranker, const InvertedIndex& index,
                     const EmbeddingStore& store,
                     const std::map<std::string, TokenizedText>& queries, const Qrels& qrels,
                     const std::map<std::string, RankedList>& pools,
                     const std::map<std::string, std::map<std::string, FeatureVec>>& extras) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [query_id, entry] : qrels) {
    const auto q_it = queries.find(query_id);
    const auto pool_it = pools.find(query_id);
    const auto feat_it = extras.find(query_id);
    if (q_it == queries.end() || pool_it == pools.end() || feat_it == extras.end()) continue;
    RankedList run;
    run.reserve(pool_it->second.size());
    for (const ScoredId& item : pool_it->second) {
      const auto f_it = feat_it->second.find(item.id);
      if (f_it == feat_it->second.end()) continue;
      // Scoring failures (e.g. a fully out-of-vocabulary document) drop the
      // document, mirroring the ranking pipeline.
      try {
        const double s =
            ranker.score(q_it->second, index.document(item.id).tokens, store, f_it->second);
        run.push_back({item.id, s});
      } catch (const std::invalid_argument&) {
      }
    }
    sort_ranked(run);
    if (ranker.confidence_enabled()) run = confidence_filter(run, ranker.extension());
    if (run.size() > 10) run.resize(10);
    sum += eval_map10(run, entry.relevant_docs);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

TrainResult train_doc_ranker(DocRanker& ranker, const DocTrainData& data,
                             const TrainOptions& opts, std::uint64_t seed) {
  if (data.index == nullptr || data.store == nullptr)
    throw std::invalid_argument("train_doc_ranker: index and store are required");
  opts.train.validate();
  opts.optimizer.validate();

  TrainResult result;

  // Fit the feature normalizer on every (training query, pooled doc) row.
  std::vector<FeatureVec> rows;
  for (const auto& [query_id, pool] : data.pools) {
    const auto q_it = data.queries.find(query_id);
    if (q_it == data.queries.end()) continue;
    for (const ScoredId& item : pool) {
      rows.push_back(doc_extra_features(q_it->second, data.index->document(item.id),
                                        *data.index, data.bm25, *data.store));
    }
  }
  if (rows.empty()) throw std::invalid_argument("train_doc_ranker: no training pool rows");
  result.feature_norm.fit(rows);

  // Normalized feature caches for both splits.
  const auto build_cache = [&](const std::map<std::string, TokenizedText>& queries,
                               const std::map<std::string, RankedList>& pools) {
    std::map<std::string, std::map<std::string, FeatureVec>> cache;
    for (const auto& [query_id, pool] : pools) {
      const auto q_it = queries.find(query_id);
      if (q_it == queries.end()) continue;
      auto& per_doc = cache[query_id];
      for (const ScoredId& item : pool) {
        per_doc[item.id] = result.feature_norm.apply(doc_extra_features(
            q_it->second, data.index->document(item.id), *data.index, data.bm25, *data.store));
      }
    }
    return cache;
  };
  const auto train_extras = build_cache(data.queries, data.pools);
  const auto dev_extras = build_cache(data.dev_queries, data.dev_pools);

  const std::vector<Parameter*> params = ranker.parameters();
  OptimizerState optimizer(opts.optimizer);
  const Rng root(seed);
  double best_map = -1.0;

  for (std::size_t epoch = 1; epoch <= opts.train.max_epochs; ++epoch) {
    Rng epoch_rng = root.fork(epoch);
    std::vector<TrainingPair> pairs = generate_pairs(data.qrels, data.pools, epoch_rng);
    epoch_rng.shuffle(pairs);
    if (pairs.empty()) throw std::invalid_argument("train_doc_ranker: no training pairs");

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += opts.train.batch_size) {
      const std::size_t end = std::min(start + opts.train.batch_size, pairs.size());
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (Parameter* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const TrainingPair& pair = pairs[i];
        const TokenizedText& query = data.queries.at(pair.query_id);
        const auto& feats = train_extras.at(pair.query_id);
        DocRankerTrace pos_trace, neg_trace;
        const double s_pos =
            ranker.score(query, data.index->document(pair.pos_doc_id).tokens, *data.store,
                         feats.at(pair.pos_doc_id), &pos_trace);
        const double s_neg =
            ranker.score(query, data.index->document(pair.neg_doc_id).tokens, *data.store,
                         feats.at(pair.neg_doc_id), &neg_trace);
        batch_loss += pair_loss(opts.train, s_pos, s_neg);
        const auto [d_pos, d_neg] = pair_grad(opts.train, s_pos, s_neg);
        if (d_pos != 0.0) ranker.backward(d_pos * inv_batch, pos_trace);
        if (d_neg != 0.0) ranker.backward(d_neg * inv_batch, neg_trace);
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss))
        abort_non_finite(batch_loss, epoch, start / opts.train.batch_size, params);
      optimizer.step(params);
      epoch_loss += batch_loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(pairs.size());
    result.epoch_loss.push_back(epoch_loss);

    const double dev_map = dev_map10_doc(ranker, *data.index, *data.store, data.dev_queries,
                                         data.dev_qrels, data.dev_pools, dev_extras);
    result.epoch_dev_map10.push_back(dev_map);
    if (opts.verbose) {
      std::cerr << "epoch " << epoch << ": loss " << epoch_loss << ", dev MAP@10 " << dev_map
                << "\n";
    }
    if (dev_map > best_map) {  // strict: ties keep the earlier epoch
      best_map = dev_map;
      result.chosen_epoch = epoch;
      result.best_dev_map10 = dev_map;
      result.best_params = ParamsFile{};
      export_parameters(params, result.best_params);
      result.feature_norm.save(result.best_params, "doc_features");
      result.best_params.metadata["chosen_epoch"] = std::to_string(epoch);
      result.best_params.metadata["model"] = reranker_name(ranker.kind());
    }
    if (opts.early_stop_map >= 0.0 && best_map >= opts.early_stop_map) break;
  }

  import_parameters(result.best_params, params);  // leave the model at the chosen epoch
  return result;
}

// ---------------------------------------------------------------------------
// BCNN snippet training
// ---------------------------------------------------------------------------

SnippetDataset build_snippet_dataset(const InvertedIndex& index, const Qrels& qrels,
                                     const std::map<std::string, TokenizedText>& queries,
                                     const EmbeddingStore& store, const BcnnConfig& cfg,
                                     const Bm25Config& bm25, const FeatureNormalizer* norm,
                                     double avg_len_override) {
  SnippetDataset out;
  const IdfLookup idf = [&store](const std::string& term) { return store.idf_of(term); };

  struct RawRow {
    std::string query_id;
    SnippetCandidate cand;
    FeatureVec raw{};
  };
  std::vector<RawRow> raw_rows;
  double token_total = 0.0;
  std::size_t sentence_count = 0;

  // First pass: collect candidates and token counts (the BM25-like feature
  // needs the fitted average snippet length).
  for (const auto& [query_id, entry] : qrels) {
    const auto q_it = queries.find(query_id);
    if (q_it == queries.end()) continue;
    for (const std::string& doc_id : entry.relevant_docs) {
      if (!index.has_document(doc_id)) continue;
      const auto gold_it = entry.gold_snippets.find(doc_id);
      const std::vector<std::pair<std::size_t, std::size_t>> gold =
          gold_it != entry.gold_snippets.end()
              ? gold_it->second
              : std::vector<std::pair<std::size_t, std::size_t>>{};
      std::vector<SnippetCandidate> sentences =
          label_sentences(index.document(doc_id), gold, cfg.max_snippet_tokens);
      for (SnippetCandidate& cand : sentences) {
        if (cand.tokens.empty()) continue;
        token_total += static_cast<double>(cand.tokens.size());
        ++sentence_count;
        raw_rows.push_back({query_id, std::move(cand), {}});
      }
    }
  }
  if (raw_rows.empty())
    throw std::invalid_argument("build_snippet_dataset: no labeled sentences");

  out.avg_snippet_len = avg_len_override > 0.0
                            ? avg_len_override
                            : token_total / static_cast<double>(sentence_count);

  std::vector<FeatureVec> fit_rows;
  fit_rows.reserve(raw_rows.size());
  for (RawRow& row : raw_rows) {
    const TokenizedText& query = queries.at(row.query_id);
    const double snip_bm25 =
        bm25_like_score(query, row.cand.tokens, idf, bm25.k1, bm25.b, out.avg_snippet_len);
    row.raw = raw_extra_features(query, row.cand.tokens, snip_bm25, idf);
    fit_rows.push_back(row.raw);
  }
  if (norm != nullptr) {
    out.norm = *norm;
  } else {
    out.norm.fit(fit_rows);
  }
  for (RawRow& row : raw_rows) {
    SnippetExample ex;
    ex.extras = out.norm.apply(row.raw);
    ex.cand = std::move(row.cand);
    out.examples[row.query_id].push_back(std::move(ex));
  }
  return out;
}

std::vector<SnippetPair> generate_snippet_pairs(
    const std::map<std::string, std::vector<SnippetExample>>& examples, Rng& rng,
    std::size_t* skipped_queries) {
  std::vector<SnippetPair> pairs;
  std::size_t skipped = 0;
  for (const auto& [query_id, rows] : examples) {
    std::vector<std::size_t> positives, negatives;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (rows[i].cand.label == 1 ? positives : negatives).push_back(i);
    }
    if (positives.empty() || negatives.empty()) {
      ++skipped;
      continue;
    }
    for (const std::size_t pos : positives) {
      pairs.push_back({query_id, pos, negatives[rng.uniform_index(negatives.size())]});
    }
  }
  if (skipped != 0) {
    std::cerr << "generate_snippet_pairs: skipped " << skipped
              << " queries lacking a positive or a negative sentence\n";
  }
  if (skipped_queries != nullptr) *skipped_queries = skipped;
  return pairs;
}

double dev_map10_snippets(const BcnnModel& model, const EmbeddingStore& store,
                          const std::map<std::string, TokenizedText>& queries,
                          const std::map<std::string, std::vector<SnippetExample>>& examples,
                          const Qrels& qrels) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [query_id, rows] : examples) {
    const auto q_it = queries.find(query_id);
    const auto qrel_it = qrels.find(query_id);
    if (q_it == queries.end() || qrel_it == qrels.end()) continue;
    std::vector<std::pair<double, std::size_t>> scored;  // (score, row index)
    scored.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      scored.emplace_back(
          model.bcnn_score(q_it->second, rows[i].cand.tokens, store, rows[i].extras), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [&rows](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      const SnippetCandidate& ca = rows[a.second].cand;
      const SnippetCandidate& cb = rows[b.second].cand;
      if (ca.doc_id != cb.doc_id) return ca.doc_id < cb.doc_id;
      return ca.sentence_index < cb.sentence_index;
    });
    std::vector<SnippetRef> run;
    for (std::size_t i = 0; i < scored.size() && i < 10; ++i) {
      const SnippetCandidate& cand = rows[scored[i].second].cand;
      run.push_back({cand.doc_id, cand.span.start_char, cand.span.end_char});
    }
    sum += snippet_ap10(run, gold_snippet_refs(qrel_it->second));
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

TrainResult train_bcnn(BcnnModel& model, const SnippetTrainData& data, const TrainOptions& opts,
                       std::uint64_t seed) {
  if (data.store == nullptr) throw std::invalid_argument("train_bcnn: store is required");
  opts.train.validate();
  opts.optimizer.validate();

  TrainResult result;
  const std::vector<Parameter*> params = model.parameters();
  OptimizerState optimizer(opts.optimizer);
  const Rng root(seed);
  double best_map = -1.0;

  for (std::size_t epoch = 1; epoch <= opts.train.max_epochs; ++epoch) {
    Rng epoch_rng = root.fork(epoch);
    std::vector<SnippetPair> pairs = generate_snippet_pairs(data.examples, epoch_rng);
    epoch_rng.shuffle(pairs);
    if (pairs.empty()) throw std::invalid_argument("train_bcnn: no training pairs");

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += opts.train.batch_size) {
      const std::size_t end = std::min(start + opts.train.batch_size, pairs.size());
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (Parameter* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const SnippetPair& pair = pairs[i];
        const TokenizedText& query = data.queries.at(pair.query_id);
        const std::vector<SnippetExample>& rows = data.examples.at(pair.query_id);
        const SnippetExample& pos = rows[pair.pos_index];
        const SnippetExample& neg = rows[pair.neg_index];
        BcnnTrace pos_trace, neg_trace;
        const double s_pos = model.logit(query, pos.cand.tokens, *data.store, pos.extras,
                                         &pos_trace);
        const double s_neg = model.logit(query, neg.cand.tokens, *data.store, neg.extras,
                                         &neg_trace);
        batch_loss += pair_loss(opts.train, s_pos, s_neg);
        const auto [d_pos, d_neg] = pair_grad(opts.train, s_pos, s_neg);
        if (d_pos != 0.0) model.backward(d_pos * inv_batch, pos_trace);
        if (d_neg != 0.0) model.backward(d_neg * inv_batch, neg_trace);
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss))
        abort_non_finite(batch_loss, epoch, start / opts.train.batch_size, params);
      optimizer.step(params);
      epoch_loss += batch_loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(pairs.size());
    result.epoch_loss.push_back(epoch_loss);

    const double dev_map = dev_map10_snippets(model, *data.store, data.dev_queries,
                                              data.dev_examples, data.dev_qrels);
    result.epoch_dev_map10.push_back(dev_map);
    if (opts.verbose) {
      std::cerr << "epoch " << epoch << ": loss " << epoch_loss << ", dev snippet MAP@10 "
                << dev_map << "\n";
    }
    if (dev_map > best_map) {
      best_map = dev_map;
      result.chosen_epoch = epoch;
      result.best_dev_map10 = dev_map;
      result.best_params = ParamsFile{};
      export_parameters(params, result.best_params);
      result.best_params.metadata["chosen_epoch"] = std::to_string(epoch);
      result.best_params.metadata["model"] = "bcnn";
    }
    if (opts.early_stop_map >= 0.0 && best_map >= opts.early_stop_map) break;
  }

  import_parameters(result.best_params, params);
  return result;
}

}  // namespace bioir
