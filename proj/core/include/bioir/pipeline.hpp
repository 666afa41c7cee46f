#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bioir/bcnn.hpp"
#include "bioir/drmm.hpp"
#include "bioir/embeddings.hpp"
#include "bioir/features.hpp"
#include "bioir/formats.hpp"
#include "bioir/index.hpp"
#include "bioir/metrics.hpp"
#include "bioir/pacrr.hpp"
#include "bioir/ranking.hpp"
#include "bioir/rng.hpp"

namespace bioir {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class RerankerKind {
  term_pacrr,
  pacrr,
  drmm,
  abel_drmm,
  abel_density,
  abel_density_confidence,
};

/// Parses one of: term_pacrr, pacrr, drmm, abel_drmm, abel_density,
/// abel_density_confidence. Throws std::invalid_argument otherwise.
RerankerKind parse_reranker(const std::string& name);
std::string reranker_name(RerankerKind kind);
bool reranker_uses_density(RerankerKind kind);
bool reranker_uses_confidence(RerankerKind kind);

struct PipelineConfig {
  std::size_t n_pool = 100;      // N: BM25 pre-retrieval depth
  std::size_t k_docs = 10;       // K_d
  std::size_t k_snippets = 10;   // K_s
  RerankerKind reranker = RerankerKind::term_pacrr;
  std::size_t ensemble_size = 1;
  bool snippets_enabled = true;  // the snippet stage can be switched off

  void validate() const;  // K_d <= N, K_s >= 1, ensemble_size >= 1
};

// ---------------------------------------------------------------------------
// Relevance judgments
// ---------------------------------------------------------------------------

struct QrelEntry {
  std::set<std::string> relevant_docs;
  // doc id -> gold snippet [begin, end) character spans in that document
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> gold_snippets;
};

using Qrels = std::map<std::string, QrelEntry>;

Qrels build_qrels(const std::vector<QrelRecord>& records);

/// Flattens one query's gold snippets to SnippetRef form.
std::vector<SnippetRef> gold_snippet_refs(const QrelEntry& entry);

// ---------------------------------------------------------------------------
// Training pairs
// ---------------------------------------------------------------------------

struct TrainingPair {
  std::string query_id;
  std::string pos_doc_id;
  std::string neg_doc_id;
};

/// One epoch of pairwise examples: every (query, relevant-doc-in-pool) is
/// paired with one non-relevant document sampled uniformly from the same
/// query's pool. Queries lacking either side are skipped and counted.
/// Deterministic for a given rng state.
std::vector<TrainingPair> generate_pairs(const Qrels& qrels,
                                         const std::map<std::string, RankedList>& pools,
                                         Rng& rng, std::size_t* skipped_queries = nullptr);

/// Tokenized query bodies keyed by id.
std::map<std::string, TokenizedText> tokenize_queries(const std::vector<QueryRecord>& queries);

/// BM25 top-n pool per query.
std::map<std::string, RankedList> build_pools(const InvertedIndex& index, const Bm25Config& bm25,
                                              const std::map<std::string, TokenizedText>& queries,
                                              std::size_t n);

/// Raw [bm25, overlap x3] features for a query/document pair.
FeatureVec doc_extra_features(const TokenizedText& query, const Document& doc,
                              const InvertedIndex& index, const Bm25Config& bm25,
                              const EmbeddingStore& store);

// ---------------------------------------------------------------------------
// Unified document reranker
// ---------------------------------------------------------------------------

struct DocRankerTrace {
  PacrrTrace pacrr;
  DrmmTrace drmm;
  AbelTrace abel;
  DensityTrace density;
};

/// Owns one of the four reranker networks and dispatches scoring; the
/// density extension is folded into score() for the kinds that enable it,
/// while the confidence filter applies to ranked lists downstream.
class DocRanker {
 public:
  DocRanker(RerankerKind kind, const PacrrConfig& pacrr_cfg, const DrmmConfig& drmm_cfg,
            const AbelExtensionConfig& ext_cfg, std::size_t embedding_dim, std::uint64_t seed);

  RerankerKind kind() const { return kind_; }
  const AbelExtensionConfig& extension() const { return ext_; }
  bool density_enabled() const { return reranker_uses_density(kind_); }
  bool confidence_enabled() const { return reranker_uses_confidence(kind_); }

  double score(const TokenizedText& query, const TokenizedText& doc, const EmbeddingStore& store,
               const FeatureVec& extras, DocRankerTrace* trace = nullptr) const;
  void backward(double d_score, const DocRankerTrace& trace);

  std::vector<Parameter*> parameters();
  std::size_t param_count() const;

  const PacrrConfig& pacrr_config() const { return pacrr_cfg_; }
  const DrmmConfig& drmm_config() const { return drmm_cfg_; }

 private:
  RerankerKind kind_;
  PacrrConfig pacrr_cfg_;
  DrmmConfig drmm_cfg_;
  AbelExtensionConfig ext_;
  std::optional<PacrrModel> pacrr_;
  std::optional<DrmmModel> drmm_;
  std::optional<AbelDrmmModel> abel_;
};

// ---------------------------------------------------------------------------
// End-to-end reranking
// ---------------------------------------------------------------------------

struct PipelineContext {
  const InvertedIndex* index = nullptr;
  const EmbeddingStore* store = nullptr;
  const DocRanker* ranker = nullptr;
  const BcnnModel* snippet_model = nullptr;      // null -> snippet stage off
  const FeatureNormalizer* doc_norm = nullptr;   // null -> raw features
  const FeatureNormalizer* snippet_norm = nullptr;
  Bm25Config bm25;
  double snippet_avg_len = 1.0;  // fitted mean snippet length for the BM25-like feature
};

struct PipelineOutput {
  RankedList documents;                    // <= K_d, score descending
  std::vector<SnippetCandidate> snippets;  // <= K_s in post-processed order
  std::size_t pool_size = 0;               // BM25 candidates before reranking
  std::size_t unscorable_docs = 0;         // pooled docs the ranker rejected
};

/// BM25 top-N -> neural rerank -> optional confidence filter -> top K_d ->
/// sentences of the kept documents -> BCNN -> document-score post-processing.
/// A query with zero BM25 hits yields empty results.
PipelineOutput rerank_pipeline(const std::string& query_body, const PipelineContext& ctx,
                               const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Ensemble voting
// ---------------------------------------------------------------------------

/// Rank-position voting: an item at rank r <= depth receives depth + 1 - r
/// votes per run (10 votes at rank 1 for the default depth). Final order:
/// votes desc, then best single-run rank asc, then id asc. The returned
/// scores are the vote totals.
RankedList ensemble_vote(const std::vector<RankedList>& runs, std::size_t depth = 10);

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct QueryEval {
  std::string query_id;
  double doc_ap10 = 0.0;
  double doc_f1 = 0.0;
  double snip_ap10 = 0.0;
  double snip_f1 = 0.0;
};

struct EvalReport {
  std::vector<QueryEval> per_query;
  double doc_map10 = 0.0;
  double doc_mean_f1 = 0.0;
  double doc_gmap = 0.0;
  double snip_map10 = 0.0;
  double snip_mean_f1 = 0.0;
  double snip_gmap = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_missing_qrels = 0;  // run entries without a judgment
};

/// Scores each run record against its qrels entry; records without one are
/// counted and skipped. Document and snippet metrics are both reported
/// (snippet metrics stay 0 when no run carries snippets).
EvalReport evaluate_runs(const std::vector<RunRecord>& runs, const Qrels& qrels,
                         double gmap_epsilon = 1e-5);

}  // namespace bioir
