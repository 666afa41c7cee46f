#include "bioir/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <unordered_map>

namespace bioir {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

RerankerKind parse_reranker(const std::string& name) {
  if (name == "term_pacrr") return RerankerKind::term_pacrr;
  if (name == "pacrr") return RerankerKind::pacrr;
  if (name == "drmm") return RerankerKind::drmm;
  if (name == "abel_drmm") return RerankerKind::abel_drmm;
  if (name == "abel_density") return RerankerKind::abel_density;
  if (name == "abel_density_confidence") return RerankerKind::abel_density_confidence;
  throw std::invalid_argument(
      "unknown reranker '" + name +
      "' (expected term_pacrr, pacrr, drmm, abel_drmm, abel_density, or "
      "abel_density_confidence)");
}

std::string reranker_name(RerankerKind kind) {
  switch (kind) {
    case RerankerKind::term_pacrr: return "term_pacrr";
    case RerankerKind::pacrr: return "pacrr";
    case RerankerKind::drmm: return "drmm";
    case RerankerKind::abel_drmm: return "abel_drmm";
    case RerankerKind::abel_density: return "abel_density";
    case RerankerKind::abel_density_confidence: return "abel_density_confidence";
  }
  throw std::logic_error("reranker_name: unhandled kind");
}

bool reranker_uses_density(RerankerKind kind) {
  return kind == RerankerKind::abel_density || kind == RerankerKind::abel_density_confidence;
}

bool reranker_uses_confidence(RerankerKind kind) {
  return kind == RerankerKind::abel_density_confidence;
}

void PipelineConfig::validate() const {
  if (n_pool == 0) throw std::invalid_argument("PipelineConfig: N must be positive");
  if (k_docs == 0 || k_docs > n_pool)
    throw std::invalid_argument("PipelineConfig: K_d must satisfy 1 <= K_d <= N");
  if (k_snippets == 0) throw std::invalid_argument("PipelineConfig: K_s must be >= 1");
  if (ensemble_size == 0)
    throw std::invalid_argument("PipelineConfig: ensemble_size must be >= 1");
}

// ---------------------------------------------------------------------------
// Qrels
// ---------------------------------------------------------------------------

Qrels build_qrels(const std::vector<QrelRecord>& records) {
  Qrels out;
  for (const QrelRecord& rec : records) {
    QrelEntry& entry = out[rec.query_id];
    entry.relevant_docs.insert(rec.relevant_docs.begin(), rec.relevant_docs.end());
    for (const SnippetRef& snip : rec.gold_snippets) {
      entry.gold_snippets[snip.doc_id].emplace_back(snip.begin_char, snip.end_char);
    }
  }
  return out;
}

std::vector<SnippetRef> gold_snippet_refs(const QrelEntry& entry) {
  std::vector<SnippetRef> out;
  for (const auto& [doc_id, spans] : entry.gold_snippets) {
    for (const auto& [begin, end] : spans) out.push_back({doc_id, begin, end});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training pairs
// ---------------------------------------------------------------------------

std::vector<TrainingPair> generate_pairs(const Qrels& qrels,
                                         const std::map<std::string, RankedList>& pools,
                                         Rng& rng, std::size_t* skipped_queries) {
  std::vector<TrainingPair> pairs;
  std::size_t skipped = 0;
  for (const auto& [query_id, entry] : qrels) {
    const auto pool_it = pools.find(query_id);
    if (pool_it == pools.end() || pool_it->second.empty()) {
      ++skipped;
      continue;
    }
    std::vector<std::string> positives, negatives;
    for (const ScoredId& item : pool_it->second) {
      if (entry.relevant_docs.count(item.id) != 0) {
        positives.push_back(item.id);
      } else {
        negatives.push_back(item.id);
      }
    }
    if (positives.empty() || negatives.empty()) {
      ++skipped;
      continue;
    }
    for (const std::string& pos : positives) {
      const std::string& neg = negatives[rng.uniform_index(negatives.size())];
      pairs.push_back({query_id, pos, neg});
    }
  }
  if (skipped != 0) {
    std::cerr << "generate_pairs: skipped " << skipped
              << " queries lacking a positive or a negative in their pool\n";
  }
  if (skipped_queries != nullptr) *skipped_queries = skipped;
  return pairs;
}

std::map<std::string, TokenizedText> tokenize_queries(const std::vector<QueryRecord>& queries) {
  std::map<std::string, TokenizedText> out;
  for (const QueryRecord& q : queries) out[q.id] = tokenize(q.body);
  return out;
}

std::map<std::string, RankedList> build_pools(const InvertedIndex& index, const Bm25Config& bm25,
                                              const std::map<std::string, TokenizedText>& queries,
                                              std::size_t n) {
  std::map<std::string, RankedList> out;
  for (const auto& [id, tokens] : queries) out[id] = index.retrieve_top_n(bm25, tokens, n);
  return out;
}

FeatureVec doc_extra_features(const TokenizedText& query, const Document& doc,
                              const InvertedIndex& index, const Bm25Config& bm25,
                              const EmbeddingStore& store) {
  const double bm25_value = index.bm25_score(bm25, query, doc.id);
  const IdfLookup idf = [&store](const std::string& term) { return store.idf_of(term); };
  return raw_extra_features(query, doc.tokens, bm25_value, idf);
}

// ---------------------------------------------------------------------------
// DocRanker
// ---------------------------------------------------------------------------

DocRanker::DocRanker(RerankerKind kind, const PacrrConfig& pacrr_cfg, const DrmmConfig& drmm_cfg,
                     const AbelExtensionConfig& ext_cfg, std::size_t embedding_dim,
                     std::uint64_t seed)
    : kind_(kind), pacrr_cfg_(pacrr_cfg), drmm_cfg_(drmm_cfg), ext_(ext_cfg) {
  ext_.validate();
  switch (kind_) {
    case RerankerKind::term_pacrr:
      pacrr_cfg_.head = PacrrConfig::Head::per_term_mlp;
      pacrr_.emplace(pacrr_cfg_, seed);
      break;
    case RerankerKind::pacrr:
      pacrr_cfg_.head = PacrrConfig::Head::concat_mlp;
      pacrr_.emplace(pacrr_cfg_, seed);
      break;
    case RerankerKind::drmm:
      drmm_.emplace(drmm_cfg_, embedding_dim, seed);
      break;
    case RerankerKind::abel_drmm:
    case RerankerKind::abel_density:
    case RerankerKind::abel_density_confidence:
      abel_.emplace(drmm_cfg_, embedding_dim, seed);
      break;
  }
  ext_.density_enabled = reranker_uses_density(kind_);
  ext_.confidence_enabled = reranker_uses_confidence(kind_);
}

double DocRanker::score(const TokenizedText& query, const TokenizedText& doc,
                        const EmbeddingStore& store, const FeatureVec& extras,
                        DocRankerTrace* trace) const {
  switch (kind_) {
    case RerankerKind::term_pacrr:
    case RerankerKind::pacrr: {
      const SimMatrix sim = build_sim_matrix(query, doc, store, pacrr_cfg_);
      const std::vector<double> idf_logits = query_idf_logits(query, store, pacrr_cfg_.l_q);
      return pacrr_->score(sim, idf_logits, extras, trace != nullptr ? &trace->pacrr : nullptr);
    }
    case RerankerKind::drmm:
      return drmm_->score(query, doc, store, extras, trace != nullptr ? &trace->drmm : nullptr);
    case RerankerKind::abel_drmm:
      return abel_->score(query, doc, store, extras, trace != nullptr ? &trace->abel : nullptr);
    case RerankerKind::abel_density:
    case RerankerKind::abel_density_confidence:
      return abel_->density_score(query, doc, store, extras, ext_.l_w,
                                  trace != nullptr ? &trace->density : nullptr);
  }
  throw std::logic_error("DocRanker::score: unhandled kind");
}

void DocRanker::backward(double d_score, const DocRankerTrace& trace) {
  switch (kind_) {
    case RerankerKind::term_pacrr:
    case RerankerKind::pacrr:
      pacrr_->backward(d_score, trace.pacrr);
      return;
    case RerankerKind::drmm:
      drmm_->backward(d_score, trace.drmm);
      return;
    case RerankerKind::abel_drmm:
      abel_->backward(d_score, trace.abel);
      return;
    case RerankerKind::abel_density:
    case RerankerKind::abel_density_confidence:
      abel_->density_backward(d_score, trace.density);
      return;
  }
  throw std::logic_error("DocRanker::backward: unhandled kind");
}

std::vector<Parameter*> DocRanker::parameters() {
  if (pacrr_.has_value()) return pacrr_->parameters();
  if (drmm_.has_value()) return drmm_->parameters();
  return abel_->parameters();
}

std::size_t DocRanker::param_count() const {
  if (pacrr_.has_value()) return pacrr_->param_count();
  if (drmm_.has_value()) return drmm_->param_count();
  return abel_->param_count();
}

// ---------------------------------------------------------------------------
// End-to-end reranking
// ---------------------------------------------------------------------------

PipelineOutput rerank_pipeline(const std::string& query_body, const PipelineContext& ctx,
                               const PipelineConfig& cfg) {
  cfg.validate();
  if (ctx.index == nullptr || ctx.store == nullptr || ctx.ranker == nullptr)
    throw std::invalid_argument("rerank_pipeline: index, store, and ranker are required");

  PipelineOutput out;
  const TokenizedText query = tokenize(query_body);
  if (query.empty()) return out;

  // Stage 1: BM25 pre-retrieval.
  const RankedList pool = ctx.index->retrieve_top_n(ctx.bm25, query, cfg.n_pool);
  out.pool_size = pool.size();
  if (pool.empty()) return out;

  // Stage 2: neural reranking of the pool.
  RankedList reranked;
  reranked.reserve(pool.size());
  for (const ScoredId& item : pool) {
    const Document& doc = ctx.index->document(item.id);
    FeatureVec extras = doc_extra_features(query, doc, *ctx.index, ctx.bm25, *ctx.store);
    if (ctx.doc_norm != nullptr) extras = ctx.doc_norm->apply(extras);
    try {
      reranked.push_back({item.id, ctx.ranker->score(query, doc.tokens, *ctx.store, extras)});
    } catch (const std::invalid_argument& err) {
      ++out.unscorable_docs;
      std::cerr << "rerank_pipeline: skipping document '" << item.id << "': " << err.what()
                << "\n";
    }
  }
  sort_ranked(reranked);

  // Stage 3: optional confidence filter, then keep the top K_d.
  if (ctx.ranker->confidence_enabled()) {
    reranked = confidence_filter(reranked, ctx.ranker->extension());
  }
  if (reranked.size() > cfg.k_docs) reranked.resize(cfg.k_docs);
  out.documents = reranked;

  // Stage 4: snippet scoring over the kept documents.
  if (!cfg.snippets_enabled || ctx.snippet_model == nullptr || out.documents.empty()) return out;

  const IdfLookup idf = [&ctx](const std::string& term) { return ctx.store->idf_of(term); };
  std::vector<SnippetCandidate> candidates;
  for (const ScoredId& item : out.documents) {
    const Document& doc = ctx.index->document(item.id);
    std::vector<SnippetCandidate> sentences =
        label_sentences(doc, {}, ctx.snippet_model->config().max_snippet_tokens);
    for (SnippetCandidate& cand : sentences) {
      if (cand.tokens.empty()) continue;  // unscorable (no tokens survive)
      cand.doc_score = item.score;
      const double snip_bm25 =
          bm25_like_score(query, cand.tokens, idf, ctx.bm25.k1, ctx.bm25.b,
                          ctx.snippet_avg_len > 0.0 ? ctx.snippet_avg_len : 1.0);
      FeatureVec extras = raw_extra_features(query, cand.tokens, snip_bm25, idf);
      if (ctx.snippet_norm != nullptr) extras = ctx.snippet_norm->apply(extras);
      cand.bcnn_score = ctx.snippet_model->bcnn_score(query, cand.tokens, *ctx.store, extras);
      candidates.push_back(std::move(cand));
    }
  }
  out.snippets = rank_and_postprocess(std::move(candidates), cfg.k_snippets);
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble voting
// ---------------------------------------------------------------------------

RankedList ensemble_vote(const std::vector<RankedList>& runs, std::size_t depth) {
  if (runs.empty()) throw std::invalid_argument("ensemble_vote: need at least one run");
  if (depth == 0) throw std::invalid_argument("ensemble_vote: depth must be positive");
  struct Tally {
    double votes = 0.0;
    std::size_t best_rank = 0;
  };
  std::unordered_map<std::string, Tally> tallies;
  std::vector<std::string> order;  // first-seen order, for map-free iteration
  for (const RankedList& run : runs) {
    for (std::size_t i = 0; i < run.size() && i < depth; ++i) {
      const std::size_t rank = i + 1;
      auto [it, inserted] = tallies.try_emplace(run[i].id);
      if (inserted) {
        it->second.best_rank = rank;
        order.push_back(run[i].id);
      }
      it->second.votes += static_cast<double>(depth + 1 - rank);
      it->second.best_rank = std::min(it->second.best_rank, rank);
    }
  }
  RankedList out;
  out.reserve(order.size());
  for (const std::string& id : order) out.push_back({id, tallies[id].votes});
  std::stable_sort(out.begin(), out.end(), [&tallies](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    const std::size_t ra = tallies.at(a.id).best_rank;
    const std::size_t rb = tallies.at(b.id).best_rank;
    if (ra != rb) return ra < rb;
    return a.id < b.id;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalReport evaluate_runs(const std::vector<RunRecord>& runs, const Qrels& qrels,
                         double gmap_epsilon) {
  EvalReport report;
  std::vector<double> doc_aps, snip_aps;
  bool any_snippets = false;
  for (const RunRecord& run : runs) {
    const auto it = qrels.find(run.query_id);
    if (it == qrels.end()) {
      ++report.n_missing_qrels;
      continue;
    }
    QueryEval ev;
    ev.query_id = run.query_id;
    RankedList docs = run.documents;
    if (docs.size() > 10) docs.resize(10);
    ev.doc_ap10 = eval_map10(docs, it->second.relevant_docs);
    ev.doc_f1 = eval_f1(run.documents, it->second.relevant_docs);

    std::vector<SnippetRef> run_snips;
    run_snips.reserve(run.snippets.size());
    for (const ScoredSnippet& s : run.snippets) run_snips.push_back(s.ref);
    const std::vector<SnippetRef> gold = gold_snippet_refs(it->second);
    ev.snip_ap10 = snippet_ap10(run_snips, gold);
    ev.snip_f1 = snippet_f1(run_snips, gold);
    if (!run.snippets.empty()) any_snippets = true;

    doc_aps.push_back(ev.doc_ap10);
    snip_aps.push_back(ev.snip_ap10);
    report.doc_map10 += ev.doc_ap10;
    report.doc_mean_f1 += ev.doc_f1;
    report.snip_map10 += ev.snip_ap10;
    report.snip_mean_f1 += ev.snip_f1;
    report.per_query.push_back(std::move(ev));
  }
  report.n_queries = report.per_query.size();
  if (report.n_queries != 0) {
    const auto n = static_cast<double>(report.n_queries);
    report.doc_map10 /= n;
    report.doc_mean_f1 /= n;
    report.doc_gmap = eval_gmap(doc_aps, gmap_epsilon);
    if (any_snippets) {
      report.snip_map10 /= n;
      report.snip_mean_f1 /= n;
      report.snip_gmap = eval_gmap(snip_aps, gmap_epsilon);
    } else {
      report.snip_map10 = 0.0;
      report.snip_mean_f1 = 0.0;
      report.snip_gmap = 0.0;
    }
  }
  return report;
}

}  // namespace bioir
