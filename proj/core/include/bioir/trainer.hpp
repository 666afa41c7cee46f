#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bioir/bcnn.hpp"
#include "bioir/features.hpp"
#include "bioir/nn.hpp"
#include "bioir/optimizer.hpp"
#include "bioir/params_io.hpp"
#include "bioir/pipeline.hpp"

namespace bioir {

/// Published per-model training configurations: DRMM-family models use Adam
/// (lr 0.01) with hinge loss (margin 1), batch 32; the PACRR heads use Adam
/// (lr 0.001) with the binary log loss, batch 32; BCNN uses AdaGrad (lr 0.08,
/// L2 0.0004) with the log loss, batch 200.
TrainConfig default_train_config(RerankerKind kind);
OptimizerConfig default_optimizer_config(RerankerKind kind);
TrainConfig default_bcnn_train_config();
OptimizerConfig default_bcnn_optimizer_config();

struct TrainOptions {
  TrainConfig train;
  OptimizerConfig optimizer;
  double early_stop_map = -1.0;  // stop once dev MAP@10 reaches this (< 0 disables)
  bool verbose = false;          // one stderr line per epoch
};

struct TrainResult {
  std::size_t chosen_epoch = 0;  // 1-based epoch of the returned snapshot
  double best_dev_map10 = 0.0;
  std::vector<double> epoch_loss;       // mean pair loss per epoch
  std::vector<double> epoch_dev_map10;  // dev MAP@10 after each epoch
  ParamsFile best_params;               // model weights + feature normalizer
  FeatureNormalizer feature_norm;       // fitted on the training pools
  double avg_snippet_len = 0.0;         // BCNN only: fitted mean snippet length
};

// ---------------------------------------------------------------------------
// Document reranker training
// ---------------------------------------------------------------------------

struct DocTrainData {
  const InvertedIndex* index = nullptr;
  const EmbeddingStore* store = nullptr;
  Bm25Config bm25;
  std::map<std::string, TokenizedText> queries;  // training split
  Qrels qrels;
  std::map<std::string, RankedList> pools;  // BM25 top-N per training query
  std::map<std::string, TokenizedText> dev_queries;  // epoch-selection split
  Qrels dev_qrels;
  std::map<std::string, RankedList> dev_pools;
};

/// Pairwise training with per-epoch pair resampling and dev-MAP@10 epoch
/// selection (ties keep the earlier epoch). The model is left holding the
/// chosen snapshot. Throws std::runtime_error with epoch/batch diagnostics
/// when the loss turns non-finite.
TrainResult train_doc_ranker(DocRanker& ranker, const DocTrainData& data,
                             const TrainOptions& opts, std::uint64_t seed);

/// Dev-style evaluation used during training: rerank each query's pool,
/// apply the confidence filter when the ranker enables it, truncate to 10,
/// and average AP@10 over queries with judgments.
double dev_map10_doc(const DocRanker& ranker, const InvertedIndex& index,
                     const EmbeddingStore& store,
                     const std::map<std::string, TokenizedText>& queries, const Qrels& qrels,
                     const std::map<std::string, RankedList>& pools,
                     const std::map<std::string, std::map<std::string, FeatureVec>>& extras);

// ---------------------------------------------------------------------------
// BCNN snippet training
// ---------------------------------------------------------------------------

struct SnippetExample {
  SnippetCandidate cand;  // label: 1 relevant / 0 not
  FeatureVec extras{};    // normalized extra features
};

struct SnippetDataset {
  std::map<std::string, std::vector<SnippetExample>> examples;  // per query id
  FeatureNormalizer norm;
  double avg_snippet_len = 0.0;
};

/// Sentences of each query's relevant documents, labeled by gold-span
/// overlap, with normalized extra features. Pass a fitted normalizer and
/// average length to reuse training-set statistics on a dev split; with
/// norm == nullptr both are fitted on this data.
SnippetDataset build_snippet_dataset(const InvertedIndex& index, const Qrels& qrels,
                                     const std::map<std::string, TokenizedText>& queries,
                                     const EmbeddingStore& store, const BcnnConfig& cfg,
                                     const Bm25Config& bm25,
                                     const FeatureNormalizer* norm = nullptr,
                                     double avg_len_override = 0.0);

struct SnippetPair {
  std::string query_id;
  std::size_t pos_index = 0;
  std::size_t neg_index = 0;
};

/// Every (query, positive sentence) paired with one uniformly sampled
/// negative sentence of the same query; one-sided queries are skipped.
std::vector<SnippetPair> generate_snippet_pairs(
    const std::map<std::string, std::vector<SnippetExample>>& examples, Rng& rng,
    std::size_t* skipped_queries = nullptr);

struct SnippetTrainData {
  const EmbeddingStore* store = nullptr;
  std::map<std::string, TokenizedText> queries;
  std::map<std::string, std::vector<SnippetExample>> examples;
  std::map<std::string, TokenizedText> dev_queries;
  std::map<std::string, std::vector<SnippetExample>> dev_examples;
  Qrels dev_qrels;  // gold spans for dev snippet MAP@10
};

TrainResult train_bcnn(BcnnModel& model, const SnippetTrainData& data, const TrainOptions& opts,
                       std::uint64_t seed);

/// Snippet MAP@10 on a dev split: rank each query's candidate sentences by
/// model score (ties: doc id, then sentence index), keep 10, and score the
/// spans against the gold spans.
double dev_map10_snippets(const BcnnModel& model, const EmbeddingStore& store,
                          const std::map<std::string, TokenizedText>& queries,
                          const std::map<std::string, std::vector<SnippetExample>>& examples,
                          const Qrels& qrels);

}  // namespace bioir
