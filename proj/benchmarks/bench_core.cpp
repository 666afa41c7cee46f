// Microbenchmarks for the hot paths: BM25 scoring and retrieval, similarity
// matrix construction, the DRMM histogram, and one forward pass per model.
// Fixtures are deterministic so numbers are comparable across runs.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "bioir/bcnn.hpp"
#include "bioir/drmm.hpp"
#include "bioir/embeddings.hpp"
#include "bioir/features.hpp"
#include "bioir/index.hpp"
#include "bioir/pacrr.hpp"
#include "bioir/rng.hpp"
#include "bioir/textprep.hpp"

namespace {

using namespace bioir;

constexpr std::size_t kDim = 50;
constexpr std::size_t kVocab = 500;

std::string word(std::size_t i) { return "w" + std::to_string(i); }

EmbeddingStore bench_store() {
  EmbeddingStore store(kDim);
  Rng rng(11);
  for (std::size_t i = 0; i < kVocab; ++i) {
    std::vector<double> v(kDim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    store.add(word(i), v);
    store.set_idf(word(i), rng.uniform(0.5, 6.0));
  }
  store.set_default_idf(1.0);
  return store;
}

std::string random_text(Rng& rng, std::size_t n_tokens) {
  std::string text;
  for (std::size_t i = 0; i < n_tokens; ++i) {
    if (i) text += ' ';
    text += word(rng.uniform_index(kVocab));
  }
  return text;
}

InvertedIndex bench_index() {
  Rng rng(23);
  std::vector<Document> corpus;
  corpus.reserve(2000);
  for (std::size_t d = 0; d < 2000; ++d) {
    corpus.push_back(make_document("d" + std::to_string(d), random_text(rng, 8),
                                   random_text(rng, 120)));
  }
  return InvertedIndex::build(std::move(corpus), {});
}

const EmbeddingStore& store() {
  static const EmbeddingStore s = bench_store();
  return s;
}

const InvertedIndex& index() {
  static const InvertedIndex idx = bench_index();
  return idx;
}

TokenizedText bench_query() {
  Rng rng(31);
  return tokenize(random_text(rng, 6));
}

TokenizedText bench_doc(std::size_t n_tokens) {
  Rng rng(37);
  return tokenize(random_text(rng, n_tokens));
}

FeatureVec bench_extras() {
  Rng rng(41);
  FeatureVec extras{};
  for (double& x : extras) x = rng.uniform(-1.0, 1.0);
  return extras;
}

void bm25_score_one(benchmark::State& state) {
  const InvertedIndex& idx = index();
  const TokenizedText query = bench_query();
  const Bm25Config cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(idx.bm25_score(cfg, query, "d1234"));
  }
}
BENCHMARK(bm25_score_one);

void bm25_retrieve_top100(benchmark::State& state) {
  const InvertedIndex& idx = index();
  const TokenizedText query = bench_query();
  const Bm25Config cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(idx.retrieve_top_n(cfg, query, 100));
  }
}
BENCHMARK(bm25_retrieve_top100);

void sim_matrix_build(benchmark::State& state) {
  const TokenizedText query = bench_query();
  const TokenizedText doc = bench_doc(300);
  PacrrConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_sim_matrix(query, doc, store(), cfg));
  }
}
BENCHMARK(sim_matrix_build);

void drmm_histogram(benchmark::State& state) {
  const std::string q_term = word(3);
  const TokenizedText doc = bench_doc(300);
  DrmmConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cosine_histogram(q_term, doc.tokens, store(), cfg.n_buckets));
  }
}
BENCHMARK(drmm_histogram);

void pacrr_forward(benchmark::State& state) {
  PacrrConfig cfg;
  PacrrModel model(cfg, 7);
  const TokenizedText query = bench_query();
  const TokenizedText doc = bench_doc(300);
  const SimMatrix sim = build_sim_matrix(query, doc, store(), cfg);
  const std::vector<double> idf = query_idf_logits(query, store(), cfg.l_q);
  const FeatureVec extras = bench_extras();
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.score(sim, idf, extras));
  }
}
BENCHMARK(pacrr_forward);

void drmm_forward(benchmark::State& state) {
  DrmmConfig cfg;
  DrmmModel model(cfg, kDim, 7);
  const TokenizedText query = bench_query();
  const TokenizedText doc = bench_doc(300);
  const FeatureVec extras = bench_extras();
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.score(query, doc, store(), extras));
  }
}
BENCHMARK(drmm_forward);

void abel_drmm_forward(benchmark::State& state) {
  DrmmConfig cfg;
  AbelDrmmModel model(cfg, kDim, 7);
  const TokenizedText query = bench_query();
  const TokenizedText doc = bench_doc(300);
  const FeatureVec extras = bench_extras();
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.score(query, doc, store(), extras));
  }
}
BENCHMARK(abel_drmm_forward);

void bcnn_forward(benchmark::State& state) {
  BcnnConfig cfg;
  BcnnModel model(cfg, kDim, 7);
  const TokenizedText query = bench_query();
  const TokenizedText snippet = bench_doc(30);
  const FeatureVec extras = bench_extras();
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.logit(query, snippet, store(), extras));
  }
}
BENCHMARK(bcnn_forward);

}  // namespace

BENCHMARK_MAIN();
