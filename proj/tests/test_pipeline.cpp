#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bioir/formats.hpp"
#include "bioir/pipeline.hpp"
#include "bioir/trainer.hpp"

using namespace bioir;

namespace {

const std::string kDataDir = BIOIR_DATA_DIR;

struct ToyFixture {
  InvertedIndex index;
  EmbeddingStore store;
  std::vector<QueryRecord> queries;
  Qrels qrels;

  ToyFixture()
      : index(InvertedIndex::build(load_corpus_jsonl(kDataDir + "/toy/corpus.jsonl"), {})),
        store(EmbeddingStore::load_embeddings(kDataDir + "/toy/embeddings.txt")),
        queries(load_queries_jsonl(kDataDir + "/toy/queries.jsonl")),
        qrels(build_qrels(load_qrels_jsonl(kDataDir + "/toy/qrels.jsonl"))) {
    store.load_idf(kDataDir + "/toy/idf.tsv");
  }
};

RankedList ranked(const std::vector<std::string>& ids) {
  RankedList list;
  for (std::size_t i = 0; i < ids.size(); ++i)
    list.push_back({ids[i], static_cast<double>(ids.size() - i)});
  return list;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reranker selection and config validation
// ---------------------------------------------------------------------------

TEST_CASE("reranker names round-trip and gate the extensions") {
  for (const auto kind :
       {RerankerKind::term_pacrr, RerankerKind::pacrr, RerankerKind::drmm,
        RerankerKind::abel_drmm, RerankerKind::abel_density,
        RerankerKind::abel_density_confidence}) {
    CHECK(parse_reranker(reranker_name(kind)) == kind);
  }
  CHECK_THROWS_AS((void)parse_reranker("bm25"), std::invalid_argument);

  CHECK_FALSE(reranker_uses_density(RerankerKind::abel_drmm));
  CHECK(reranker_uses_density(RerankerKind::abel_density));
  CHECK(reranker_uses_density(RerankerKind::abel_density_confidence));
  CHECK_FALSE(reranker_uses_confidence(RerankerKind::abel_density));
  CHECK(reranker_uses_confidence(RerankerKind::abel_density_confidence));

  PipelineConfig cfg;
  cfg.n_pool = 5;
  cfg.k_docs = 10;  // K_d > N
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.k_docs = 5;
  CHECK_NOTHROW(cfg.validate());
  cfg.k_snippets = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Qrels and training pairs
// ---------------------------------------------------------------------------

TEST_CASE("build_qrels groups snippets per document") {
  QrelRecord rec;
  rec.query_id = "q1";
  rec.relevant_docs = {"d1", "d2"};
  rec.gold_snippets = {{"d1", 0, 10}, {"d1", 20, 30}, {"d2", 5, 15}};
  const Qrels qrels = build_qrels({rec});
  REQUIRE(qrels.count("q1") == 1);
  const QrelEntry& entry = qrels.at("q1");
  CHECK(entry.relevant_docs == std::set<std::string>{"d1", "d2"});
  REQUIRE(entry.gold_snippets.at("d1").size() == 2);
  CHECK(entry.gold_snippets.at("d1")[1] == std::pair<std::size_t, std::size_t>{20, 30});
  const std::vector<SnippetRef> refs = gold_snippet_refs(entry);
  CHECK(refs.size() == 3);
}

TEST_CASE("generate_pairs pairs every in-pool relevant doc with one negative") {
  Qrels qrels;
  qrels["q1"].relevant_docs = {"a"};
  qrels["q2"].relevant_docs = {"x", "y"};  // whole pool relevant -> skipped
  qrels["q3"].relevant_docs = {"m"};       // m not pooled -> skipped
  std::map<std::string, RankedList> pools;
  pools["q1"] = ranked({"a", "b"});
  pools["q2"] = ranked({"x", "y"});
  pools["q3"] = ranked({"n", "o"});

  std::size_t skipped = 0;
  Rng rng(42);
  const std::vector<TrainingPair> pairs = generate_pairs(qrels, pools, rng, &skipped);
  REQUIRE(pairs.size() == 1);  // only q1 has both sides
  CHECK(pairs[0].query_id == "q1");
  CHECK(pairs[0].pos_doc_id == "a");
  CHECK(pairs[0].neg_doc_id == "b");
  CHECK(skipped == 2);

  // deterministic for a fixed seed
  Rng r1(7), r2(7);
  Qrels big;
  std::map<std::string, RankedList> big_pools;
  for (int q = 0; q < 4; ++q) {
    const std::string qid = "Q" + std::to_string(q);
    big[qid].relevant_docs = {"r0", "r1"};
    big_pools[qid] = ranked({"r0", "r1", "n0", "n1", "n2", "n3"});
  }
  const auto p1 = generate_pairs(big, big_pools, r1);
  const auto p2 = generate_pairs(big, big_pools, r2);
  REQUIRE(p1.size() == 8);  // 4 queries x 2 relevant
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].query_id == p2[i].query_id);
    CHECK(p1[i].pos_doc_id == p2[i].pos_doc_id);
    CHECK(p1[i].neg_doc_id == p2[i].neg_doc_id);
    // negatives are never in the relevant set
    CHECK(big[p1[i].query_id].relevant_docs.count(p1[i].neg_doc_id) == 0);
  }
}

// ---------------------------------------------------------------------------
// Ensemble voting
// ---------------------------------------------------------------------------

TEST_CASE("a single run votes itself back in order") {
  const RankedList run = ranked({"a", "b", "c"});
  const RankedList out = ensemble_vote({run}, 10);
  REQUIRE(out.size() == 3);
  CHECK(out[0].id == "a");
  CHECK(out[0].score == 10.0);  // depth + 1 - 1
  CHECK(out[1].id == "b");
  CHECK(out[1].score == 9.0);
  CHECK(out[2].id == "c");
  CHECK(out[2].score == 8.0);
}

TEST_CASE("rank 1 and rank 3 across two runs total 18 votes at depth 10") {
  const RankedList run_a = ranked({"doc7", "x1", "x2"});
  const RankedList run_b = ranked({"y1", "y2", "doc7"});
  const RankedList out = ensemble_vote({run_a, run_b}, 10);
  REQUIRE(!out.empty());
  CHECK(out[0].id == "doc7");  // 10 + 8 beats any single-run 10
  CHECK(out[0].score == 18.0);
}

TEST_CASE("items beyond the voting depth receive no votes") {
  std::vector<std::string> ids;
  for (int i = 0; i < 12; ++i) ids.push_back("d" + std::to_string(i));
  const RankedList out = ensemble_vote({ranked(ids)}, 10);
  CHECK(out.size() == 10);  // d10 and d11 got zero votes
  for (const auto& item : out) {
    CHECK(item.id != "d10");
    CHECK(item.id != "d11");
  }
}

TEST_CASE("vote ties break by best single-run rank, then id") {
  // depth 3: run1 gives a:3, b:2, c:1; run2 gives c:3, b:2, a:1
  const RankedList r1 = ranked({"a", "b", "c"});
  const RankedList r2 = ranked({"c", "b", "a"});
  const RankedList out = ensemble_vote({r1, r2}, 3);
  REQUIRE(out.size() == 3);
  // a and c have 4 votes with best rank 1; b has 4 votes with best rank 2.
  CHECK(out[0].id == "a");  // id breaks the a/c tie
  CHECK(out[1].id == "c");
  CHECK(out[2].id == "b");
  CHECK(out[0].score == 4.0);
  CHECK(out[2].score == 4.0);
}

TEST_CASE("ensemble_vote rejects empty input and zero depth") {
  CHECK_THROWS_AS((void)ensemble_vote({}, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)ensemble_vote({ranked({"a"})}, 0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Run evaluation
// ---------------------------------------------------------------------------

TEST_CASE("evaluate_runs aggregates per-query metrics and counts missing qrels") {
  Qrels qrels;
  qrels["q1"].relevant_docs = {"a", "b"};
  qrels["q1"].gold_snippets["a"] = {{0, 20}};
  qrels["q2"].relevant_docs = {"z"};

  std::vector<RunRecord> runs(3);
  runs[0].query_id = "q1";
  runs[0].documents = ranked({"a", "x", "b"});
  runs[0].snippets.push_back({{"a", 5, 12}, 0.9});   // overlaps gold
  runs[0].snippets.push_back({{"a", 90, 95}, 0.5});  // misses
  runs[1].query_id = "q2";
  runs[1].documents = ranked({"y"});
  runs[2].query_id = "q_unjudged";
  runs[2].documents = ranked({"a"});

  const EvalReport report = evaluate_runs(runs, qrels);
  CHECK(report.n_queries == 2);
  CHECK(report.n_missing_qrels == 1);

  // q1 doc AP@10: hits at 1 and 3 -> (1 + 2/3)/10; q2: 0
  const double q1_ap = (1.0 + 2.0 / 3.0) / 10.0;
  CHECK(report.per_query[0].doc_ap10 == doctest::Approx(q1_ap).epsilon(1e-12));
  CHECK(report.doc_map10 == doctest::Approx(q1_ap / 2.0).epsilon(1e-12));

  // q1 doc F1: P = 2/3, R = 1 -> 0.8; q2: 0
  CHECK(report.per_query[0].doc_f1 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(report.doc_mean_f1 == doctest::Approx(0.4).epsilon(1e-12));

  CHECK(report.doc_gmap ==
        doctest::Approx(std::exp(0.5 * (std::log(q1_ap + 1e-5) + std::log(1e-5))))
            .epsilon(1e-12));

  // snippet metrics: q1 hit at rank 1 of 2 returned; 1 of 1 gold covered
  CHECK(report.per_query[0].snip_ap10 == doctest::Approx(0.1).epsilon(1e-12));
  const double sp = 0.5, sr = 1.0;
  CHECK(report.per_query[0].snip_f1 ==
        doctest::Approx(2 * sp * sr / (sp + sr)).epsilon(1e-12));

  CHECK(evaluate_runs({}, qrels).n_queries == 0);
}

// ---------------------------------------------------------------------------
// End-to-end pipeline on the bundled toy collection
// ---------------------------------------------------------------------------

TEST_CASE("rerank_pipeline returns bounded, consistent, reproducible output") {
  const ToyFixture toy;
  const DrmmConfig drmm_cfg;
  DocRanker ranker(RerankerKind::drmm, PacrrConfig{}, drmm_cfg, AbelExtensionConfig{},
                   toy.store.dim(), 99);
  BcnnConfig bcnn_cfg;
  bcnn_cfg.n_filters = 4;
  bcnn_cfg.filter_width = 2;
  BcnnModel bcnn(bcnn_cfg, toy.store.dim(), 17);

  PipelineContext ctx;
  ctx.index = &toy.index;
  ctx.store = &toy.store;
  ctx.ranker = &ranker;
  ctx.snippet_model = &bcnn;
  ctx.snippet_avg_len = 8.0;

  PipelineConfig cfg;
  cfg.n_pool = 30;
  cfg.k_docs = 10;
  cfg.k_snippets = 10;

  for (const QueryRecord& q : toy.queries) {
    const PipelineOutput out = rerank_pipeline(q.body, ctx, cfg);
    CHECK(out.documents.size() <= cfg.k_docs);
    CHECK(out.snippets.size() <= cfg.k_snippets);
    CHECK(out.pool_size <= cfg.n_pool);
    CHECK(out.pool_size >= out.documents.size());

    // documents sorted by score descending
    for (std::size_t i = 1; i < out.documents.size(); ++i)
      CHECK(out.documents[i - 1].score >= out.documents[i].score);

    // snippets come only from returned documents and respect the
    // document-score grouping order
    std::set<std::string> returned;
    std::map<std::string, double> doc_score;
    for (const auto& d : out.documents) {
      returned.insert(d.id);
      doc_score[d.id] = d.score;
    }
    for (const auto& s : out.snippets) {
      CHECK(returned.count(s.doc_id) == 1);
      CHECK(s.doc_score == doc_score[s.doc_id]);
    }
    for (std::size_t i = 1; i < out.snippets.size(); ++i) {
      const auto& prev = out.snippets[i - 1];
      const auto& cur = out.snippets[i];
      const bool ordered =
          prev.doc_score > cur.doc_score ||
          (prev.doc_score == cur.doc_score &&
           (prev.bcnn_score > cur.bcnn_score ||
            (prev.bcnn_score == cur.bcnn_score && prev.sentence_index <= cur.sentence_index)));
      CHECK(ordered);
    }

    // bit-for-bit reproducible
    const PipelineOutput again = rerank_pipeline(q.body, ctx, cfg);
    REQUIRE(again.documents.size() == out.documents.size());
    for (std::size_t i = 0; i < out.documents.size(); ++i) {
      CHECK(again.documents[i].id == out.documents[i].id);
      CHECK(again.documents[i].score == out.documents[i].score);
    }
    REQUIRE(again.snippets.size() == out.snippets.size());
    for (std::size_t i = 0; i < out.snippets.size(); ++i) {
      CHECK(again.snippets[i].doc_id == out.snippets[i].doc_id);
      CHECK(again.snippets[i].span.start_char == out.snippets[i].span.start_char);
      CHECK(again.snippets[i].bcnn_score == out.snippets[i].bcnn_score);
    }
  }

  // no BM25 hits -> empty output
  const PipelineOutput empty = rerank_pipeline("zzzz qqqq wwww", ctx, cfg);
  CHECK(empty.documents.empty());
  CHECK(empty.snippets.empty());
  CHECK(empty.pool_size == 0);

  // snippet stage off
  PipelineConfig no_snip = cfg;
  no_snip.snippets_enabled = false;
  const PipelineOutput docs_only = rerank_pipeline(toy.queries[0].body, ctx, no_snip);
  CHECK(!docs_only.documents.empty());
  CHECK(docs_only.snippets.empty());

  PipelineContext no_model = ctx;
  no_model.snippet_model = nullptr;
  const PipelineOutput no_bcnn = rerank_pipeline(toy.queries[0].body, no_model, cfg);
  CHECK(no_bcnn.snippets.empty());
}

// ---------------------------------------------------------------------------
// Trainer smoke tests on the toy collection
// ---------------------------------------------------------------------------

TEST_CASE("doc ranker training runs, snapshots the best epoch, and restores it") {
  const ToyFixture toy;
  DocRanker ranker(RerankerKind::drmm, PacrrConfig{}, DrmmConfig{}, AbelExtensionConfig{},
                   toy.store.dim(), 7);

  DocTrainData data;
  data.index = &toy.index;
  data.store = &toy.store;
  data.queries = tokenize_queries(toy.queries);
  data.qrels = toy.qrels;
  data.pools = build_pools(toy.index, data.bm25, data.queries, 30);
  data.dev_queries = data.queries;  // tiny smoke setup: dev == train
  data.dev_qrels = toy.qrels;
  data.dev_pools = data.pools;

  TrainOptions opts;
  opts.train = default_train_config(RerankerKind::drmm);
  opts.optimizer = default_optimizer_config(RerankerKind::drmm);
  opts.train.max_epochs = 3;
  opts.train.seed = 11;

  const TrainResult result = train_doc_ranker(ranker, data, opts, 11);
  CHECK(result.epoch_loss.size() == 3);
  CHECK(result.epoch_dev_map10.size() == 3);
  CHECK(result.chosen_epoch >= 1);
  CHECK(result.chosen_epoch <= 3);
  CHECK(result.best_dev_map10 >= 0.0);
  CHECK(result.feature_norm.fitted());
  for (const double loss : result.epoch_loss) CHECK(std::isfinite(loss));

  // the model is left holding the snapshot stored in best_params
  auto params = ranker.parameters();
  for (const Parameter* p : params) {
    REQUIRE(result.best_params.has(p->name));
    const Tensor& saved = result.best_params.at(p->name);
    REQUIRE(saved.numel() == p->value.numel());
    for (std::size_t i = 0; i < saved.numel(); ++i) CHECK(saved[i] == p->value[i]);
  }
  CHECK(result.best_params.has("doc_features.min"));
  CHECK(result.best_params.metadata.count("chosen_epoch") == 1);
}

TEST_CASE("training aborts with diagnostics when the loss turns non-finite") {
  const ToyFixture toy;
  DocRanker ranker(RerankerKind::drmm, PacrrConfig{}, DrmmConfig{}, AbelExtensionConfig{},
                   toy.store.dim(), 7);
  ranker.parameters()[0]->value[0] = std::numeric_limits<double>::quiet_NaN();

  DocTrainData data;
  data.index = &toy.index;
  data.store = &toy.store;
  data.queries = tokenize_queries(toy.queries);
  data.qrels = toy.qrels;
  data.pools = build_pools(toy.index, data.bm25, data.queries, 30);
  data.dev_queries = data.queries;
  data.dev_qrels = toy.qrels;
  data.dev_pools = data.pools;

  TrainOptions opts;
  opts.train = default_train_config(RerankerKind::drmm);
  opts.optimizer = default_optimizer_config(RerankerKind::drmm);
  opts.train.max_epochs = 1;

  CHECK_THROWS_WITH_AS(train_doc_ranker(ranker, data, opts, 1),
                       doctest::Contains("non-finite loss"), std::runtime_error);
}

TEST_CASE("snippet dataset building and bcnn training smoke") {
  const ToyFixture toy;
  BcnnConfig cfg;
  cfg.n_filters = 4;
  cfg.filter_width = 2;
  const auto queries = tokenize_queries(toy.queries);
  const Bm25Config bm25;

  const SnippetDataset dataset =
      build_snippet_dataset(toy.index, toy.qrels, queries, toy.store, cfg, bm25);
  CHECK(dataset.norm.fitted());
  CHECK(dataset.avg_snippet_len > 0.0);
  REQUIRE(!dataset.examples.empty());
  std::size_t positives = 0, negatives = 0;
  for (const auto& [qid, examples] : dataset.examples) {
    for (const SnippetExample& ex : examples) {
      REQUIRE((ex.cand.label == 0 || ex.cand.label == 1));
      if (ex.cand.label == 1) positives += 1;
      else negatives += 1;
      for (const double f : ex.extras) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
      }
    }
  }
  CHECK(positives > 0);
  CHECK(negatives > 0);

  // dev split reusing the training statistics keeps the same normalization
  const SnippetDataset dev = build_snippet_dataset(toy.index, toy.qrels, queries, toy.store,
                                                   cfg, bm25, &dataset.norm,
                                                   dataset.avg_snippet_len);
  CHECK(dev.avg_snippet_len == dataset.avg_snippet_len);

  Rng r1(5), r2(5);
  std::size_t skipped = 0;
  const auto pairs1 = generate_snippet_pairs(dataset.examples, r1, &skipped);
  const auto pairs2 = generate_snippet_pairs(dataset.examples, r2);
  REQUIRE(!pairs1.empty());
  REQUIRE(pairs1.size() == pairs2.size());
  for (std::size_t i = 0; i < pairs1.size(); ++i) {
    CHECK(pairs1[i].query_id == pairs2[i].query_id);
    CHECK(pairs1[i].pos_index == pairs2[i].pos_index);
    CHECK(pairs1[i].neg_index == pairs2[i].neg_index);
  }

  BcnnModel model(cfg, toy.store.dim(), 23);
  SnippetTrainData train;
  train.store = &toy.store;
  train.queries = queries;
  train.examples = dataset.examples;
  train.dev_queries = queries;
  train.dev_examples = dev.examples;
  train.dev_qrels = toy.qrels;

  TrainOptions opts;
  opts.train = default_bcnn_train_config();
  opts.optimizer = default_bcnn_optimizer_config();
  opts.train.max_epochs = 2;

  const TrainResult result = train_bcnn(model, train, opts, 3);
  CHECK(result.epoch_loss.size() == 2);
  CHECK(result.chosen_epoch >= 1);
  for (const double loss : result.epoch_loss) CHECK(std::isfinite(loss));
  CHECK(result.best_params.metadata.at("model") == "bcnn");
}

TEST_CASE("published training configurations match the documented table") {
  const TrainConfig drmm_t = default_train_config(RerankerKind::drmm);
  CHECK(drmm_t.loss == TrainConfig::Loss::hinge);
  CHECK(drmm_t.margin == 1.0);
  CHECK(drmm_t.batch_size == 32);
  const OptimizerConfig drmm_o = default_optimizer_config(RerankerKind::drmm);
  CHECK(drmm_o.kind == OptimizerConfig::Kind::adam);
  CHECK(drmm_o.learning_rate == 0.01);

  for (const auto kind : {RerankerKind::abel_drmm, RerankerKind::abel_density,
                          RerankerKind::abel_density_confidence}) {
    CHECK(default_optimizer_config(kind).learning_rate == 0.01);
    CHECK(default_train_config(kind).loss == TrainConfig::Loss::hinge);
  }

  for (const auto kind : {RerankerKind::term_pacrr, RerankerKind::pacrr}) {
    const TrainConfig t = default_train_config(kind);
    CHECK(t.loss == TrainConfig::Loss::binary_log);
    CHECK(t.batch_size == 32);
    const OptimizerConfig o = default_optimizer_config(kind);
    CHECK(o.kind == OptimizerConfig::Kind::adam);
    CHECK(o.learning_rate == 0.001);
  }

  const TrainConfig bcnn_t = default_bcnn_train_config();
  CHECK(bcnn_t.loss == TrainConfig::Loss::binary_log);
  CHECK(bcnn_t.batch_size == 200);
  const OptimizerConfig bcnn_o = default_bcnn_optimizer_config();
  CHECK(bcnn_o.kind == OptimizerConfig::Kind::adagrad);
  CHECK(bcnn_o.learning_rate == 0.08);
  CHECK(bcnn_o.l2_lambda == 0.0004);
}
