#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "bioir/bcnn.hpp"
#include "bioir/drmm.hpp"
#include "bioir/embeddings.hpp"
#include "bioir/gradcheck.hpp"
#include "bioir/pacrr.hpp"
#include "bioir/rng.hpp"

using namespace bioir;

namespace {

/// Small random vocabulary for model tests: tok0..tokN-1 plus idf values.
EmbeddingStore tiny_store(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  EmbeddingStore store(dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < vocab; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    store.add("tok" + std::to_string(i), v);
    store.set_idf("tok" + std::to_string(i), rng.uniform(0.5, 3.0));
  }
  store.set_default_idf(1.0);
  return store;
}

TokenizedText toks(const std::vector<std::string>& words) {
  TokenizedText t;
  std::size_t pos = 0;
  for (const auto& w : words) {
    t.tokens.push_back(w);
    t.spans.emplace_back(pos, pos + w.size());
    pos += w.size() + 1;
  }
  return t;
}

const FeatureVec kExtras{0.25, 0.5, 0.75, 1.0};

}  // namespace

// ---------------------------------------------------------------------------
// PACRR family
// ---------------------------------------------------------------------------

TEST_CASE("pacrr row width and parameter counts at the published defaults") {
  PacrrConfig cfg;  // l_q=30, l_d=300, l_g=3, 16 filters, k=2, mlp 7x2, 4 extras
  CHECK(cfg.row_width() == 7);

  PacrrModel term_model(cfg, 1);  // per-term head (TERM-PACRR)
  CHECK(term_model.param_count() == 363);

  PacrrConfig concat = cfg;
  concat.head = PacrrConfig::Head::concat_mlp;
  PacrrModel pacrr_model(concat, 1);
  CHECK(pacrr_model.param_count() == 1777);
}

TEST_CASE("sim matrix masks padding and OOV with exact zeros") {
  const EmbeddingStore store = tiny_store(6, 4, 11);
  PacrrConfig cfg;
  cfg.l_q = 4;
  cfg.l_d = 6;
  const TokenizedText query = toks({"tok0", "missing", "tok2"});
  const TokenizedText doc = toks({"tok1", "tok3", "unknown", "tok4"});
  const SimMatrix sim = build_sim_matrix(query, doc, store, cfg);

  REQUIRE(sim.values.shape() == std::vector<std::size_t>{4, 6});
  REQUIRE(sim.q_mask.size() == 4);
  REQUIRE(sim.d_mask.size() == 6);
  CHECK(sim.q_mask == std::vector<std::uint8_t>{1, 0, 1, 0});  // OOV + padding masked
  CHECK(sim.d_mask == std::vector<std::uint8_t>{1, 1, 0, 1, 0, 0});

  for (std::size_t j = 0; j < 6; ++j) CHECK(sim.values(1, j) == 0.0);  // OOV q row
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(sim.values(i, 2) == 0.0);  // OOV d column
    CHECK(sim.values(i, 4) == 0.0);  // padding columns
    CHECK(sim.values(i, 5) == 0.0);
  }
  // a real cell matches the library cosine
  CHECK(sim.values(0, 0) ==
        cosine(store.lookup("tok0").values, store.lookup("tok1").values));

  // truncation: extra tokens beyond l_q / l_d are dropped
  const TokenizedText long_q = toks({"tok0", "tok1", "tok2", "tok3", "tok4", "tok5"});
  const SimMatrix truncated = build_sim_matrix(long_q, doc, store, cfg);
  CHECK(truncated.q_mask == std::vector<std::uint8_t>{1, 1, 1, 1});

  CHECK_THROWS_AS((void)build_sim_matrix(TokenizedText{}, doc, store, cfg),
                  std::invalid_argument);
}

TEST_CASE("query idf logits pull from the store with the default for unknowns") {
  EmbeddingStore store = tiny_store(3, 4, 12);
  store.set_idf("tok0", 2.5);
  store.set_default_idf(0.75);
  const std::vector<double> logits =
      query_idf_logits(toks({"tok0", "nope"}), store, 4);
  REQUIRE(logits.size() == 4);
  CHECK(logits[0] == 2.5);
  CHECK(logits[1] == 0.75);
}

TEST_CASE("masked query rows contribute exactly zero to the pacrr heads") {
  const EmbeddingStore store = tiny_store(8, 5, 21);
  PacrrConfig cfg;
  cfg.l_q = 4;
  cfg.l_d = 8;
  cfg.filters_per_size = 2;
  cfg.mlp_hidden = 3;

  const TokenizedText doc = toks({"tok1", "tok2", "tok3", "tok4", "tok5"});
  // A trailing OOV token yields a masked all-zero row, indistinguishable from
  // padding, so the score must be bit-identical to the two-term query.
  const TokenizedText q1 = toks({"tok0", "tok6"});
  const TokenizedText q2 = toks({"tok0", "tok6", "zzz-not-in-vocab"});
  // Two different unknown tokens in the same slot are also interchangeable.
  const TokenizedText q3 = toks({"tok0", "tok6", "other-unknown"});

  for (const auto head : {PacrrConfig::Head::per_term_mlp, PacrrConfig::Head::concat_mlp}) {
    cfg.head = head;
    PacrrModel model(cfg, 33);
    const auto score_of = [&](const TokenizedText& q) {
      const SimMatrix sim = build_sim_matrix(q, doc, store, cfg);
      return model.score(sim, query_idf_logits(q, store, cfg.l_q), kExtras);
    };
    const double s1 = score_of(q1);
    CHECK(s1 == score_of(q2));
    CHECK(score_of(q2) == score_of(q3));
  }
}

TEST_CASE("pacrr gradcheck (both heads)") {
  const EmbeddingStore store = tiny_store(10, 5, 31);
  PacrrConfig cfg;
  cfg.l_q = 4;
  cfg.l_d = 10;
  cfg.filters_per_size = 2;
  cfg.mlp_hidden = 3;
  const TokenizedText query = toks({"tok0", "tok1", "tok2"});
  const TokenizedText doc =
      toks({"tok3", "tok4", "tok5", "tok6", "tok7", "tok8", "tok9", "tok1"});

  for (const auto head : {PacrrConfig::Head::per_term_mlp, PacrrConfig::Head::concat_mlp}) {
    cfg.head = head;
    PacrrModel model(cfg, 77);
    const SimMatrix sim = build_sim_matrix(query, doc, store, cfg);
    const std::vector<double> idf = query_idf_logits(query, store, cfg.l_q);
    auto params = model.parameters();
    const GradCheckReport report = finite_diff_gradcheck(
        [&] { return model.score(sim, idf, kExtras); },
        [&] {
          PacrrTrace trace;
          const double s = model.score(sim, idf, kExtras, &trace);
          model.backward(1.0, trace);
          return s;
        },
        params);
    INFO("head ", head == PacrrConfig::Head::per_term_mlp ? "term" : "concat",
         " worst ", report.worst_parameter, " rel ", report.max_rel_error);
    CHECK(report.max_rel_error <= 1e-5);
  }
}

// ---------------------------------------------------------------------------
// DRMM
// ---------------------------------------------------------------------------

TEST_CASE("cosine histogram places counts in the derived buckets") {
  EmbeddingStore store(2);
  store.add("q", {1.0, 0.0});
  store.add("m1", {-1.0, 0.0});    // cos -1   -> bucket 0
  store.add("zero", {0.0, 1.0});   // cos  0   -> bucket 15
  store.add("half", {0.5, std::sqrt(3.0) / 2.0});  // cos 0.5 -> bucket 22
  store.add("same", {2.0, 0.0});   // cos  1   -> bucket 29 (clamped)

  const std::vector<std::string> doc{"m1", "zero", "half", "same", "same", "oov-term"};
  const Tensor h = cosine_histogram("q", doc, store, 30);
  REQUIRE(h.numel() == 30);
  CHECK(h[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));   // one term
  CHECK(h[15] == doctest::Approx(std::log(3.0)).epsilon(1e-15));  // zero-cos + OOV
  CHECK(h[22] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(h[29] == doctest::Approx(std::log(3.0)).epsilon(1e-15));  // two "same"
  double mass = 0.0;
  for (std::size_t i = 0; i < 30; ++i) mass += h[i];
  CHECK(mass == doctest::Approx(std::log(2.0) * 2 + std::log(3.0) * 2).epsilon(1e-12));

  CHECK_THROWS_AS((void)cosine_histogram("q", {}, store, 30), std::invalid_argument);
  CHECK_THROWS_AS((void)cosine_histogram("q", doc, store, 1), std::invalid_argument);
}

TEST_CASE("zero gating vector yields uniform term weights") {
  const EmbeddingStore store = tiny_store(4, 3, 41);
  Parameter w_g("g", Tensor({4}));  // dim + 1, all zeros
  const std::vector<double> w = gate_weights({"tok0", "tok1", "tok2"}, store, w_g);
  REQUIRE(w.size() == 3);
  for (const double v : w) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("drmm score is invariant to document token order, bit for bit") {
  const EmbeddingStore store = tiny_store(12, 5, 51);
  DrmmConfig cfg;
  DrmmModel model(cfg, store.dim(), 7);
  const TokenizedText query = toks({"tok0", "tok1", "tok2"});
  const TokenizedText doc =
      toks({"tok3", "tok4", "tok5", "tok6", "tok7", "tok8", "tok9", "tok10", "tok11"});
  TokenizedText shuffled = doc;
  Rng(5).shuffle(shuffled.tokens);

  const double s1 = model.score(query, doc, store, kExtras);
  const double s2 = model.score(query, shuffled, store, kExtras);
  CHECK(s1 == s2);  // histograms are order-free counts

  CHECK_THROWS_AS((void)model.score(TokenizedText{}, doc, store, kExtras),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)model.score(query, TokenizedText{}, store, kExtras),
                  std::invalid_argument);
}

TEST_CASE("drmm parameter count follows the architecture arithmetic") {
  DrmmConfig cfg;  // 30 buckets, 8x2 mlp, 4 extras
  const std::size_t dim = 5;
  DrmmModel model(cfg, dim, 3);
  const std::size_t mlp = (8 * 30 + 8) + (8 * 8 + 8) + (8 + 1);
  const std::size_t expected = (dim + 1) + mlp + (1 + 4) + 1;
  CHECK(model.param_count() == expected);
}

TEST_CASE("drmm gradcheck") {
  const EmbeddingStore store = tiny_store(10, 4, 61);
  DrmmConfig cfg;
  cfg.n_buckets = 6;
  cfg.mlp_hidden = 4;
  DrmmModel model(cfg, store.dim(), 13);
  const TokenizedText query = toks({"tok0", "tok1"});
  const TokenizedText doc = toks({"tok2", "tok3", "tok4", "tok5", "tok6", "tok7"});
  auto params = model.parameters();
  const GradCheckReport report = finite_diff_gradcheck(
      [&] { return model.score(query, doc, store, kExtras); },
      [&] {
        DrmmTrace trace;
        const double s = model.score(query, doc, store, kExtras, &trace);
        model.backward(1.0, trace);
        return s;
      },
      params);
  INFO("worst ", report.worst_parameter, " rel ", report.max_rel_error);
  CHECK(report.max_rel_error <= 1e-5);
}

// ---------------------------------------------------------------------------
// ABEL-DRMM and extensions
// ---------------------------------------------------------------------------

TEST_CASE("zero-weight context encoder is the identity on embeddings") {
  const EmbeddingStore store = tiny_store(5, 4, 71);
  ContextEncoderParams params("ctx", 4);
  params.W_c.value.zero();
  params.b_c.value.zero();
  const std::vector<std::string> tokens{"tok0", "tok1", "tok2"};
  const std::vector<Tensor> ctx = context_encode(tokens, store, params);
  REQUIRE(ctx.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const EmbeddingRef e = store.lookup(tokens[i]);
    for (std::size_t d = 0; d < 4; ++d) {
      CHECK(ctx[i][d] == e.values[d]);  // leaky_relu(0) + e == e exactly
    }
  }
}

TEST_CASE("abel attention weights form a masked distribution") {
  const Tensor q_ctx = Tensor::vec({1.0, 0.0, 0.0});
  std::vector<Tensor> doc_ctx{
      Tensor::vec({1.0, 0.0, 0.0}),
      Tensor::vec({0.0, 1.0, 0.0}),
      Tensor::vec({0.5, 0.5, 0.0}),
  };
  const std::vector<std::uint8_t> mask{1, 0, 1};
  AbelQtermTrace trace;
  const Tensor phi = abel_qterm_encoding(q_ctx, doc_ctx, mask, &trace);
  REQUIRE(trace.att_weights.size() == 3);
  CHECK(trace.att_weights[1] == 0.0);  // masked exactly
  CHECK(trace.att_weights[0] + trace.att_weights[2] == doctest::Approx(1.0).epsilon(1e-14));
  // logits are dot products 1.0 and 0.5 -> softmax over two entries
  const double e0 = std::exp(1.0), e2 = std::exp(0.5);
  CHECK(trace.att_weights[0] == doctest::Approx(e0 / (e0 + e2)).epsilon(1e-14));
  // phi = (a0*d0 + a2*d2) element-wise-times q_ctx
  const double d_rep0 = trace.att_weights[0] * 1.0 + trace.att_weights[2] * 0.5;
  CHECK(phi[0] == doctest::Approx(d_rep0).epsilon(1e-14));
  CHECK(phi[1] == 0.0);  // q_ctx[1] == 0

  CHECK_THROWS_AS((void)abel_qterm_encoding(q_ctx, doc_ctx, std::vector<std::uint8_t>{0, 0, 0}),
                  std::invalid_argument);
}

TEST_CASE("abel-drmm rejects all-OOV documents") {
  const EmbeddingStore store = tiny_store(6, 4, 81);
  AbelDrmmModel model(DrmmConfig{}, store.dim(), 17);
  const TokenizedText query = toks({"tok0", "tok1"});
  const TokenizedText oov_doc = toks({"xx1", "xx2", "xx3"});
  CHECK_THROWS_AS((void)model.score(query, oov_doc, store, kExtras), std::invalid_argument);
}

TEST_CASE("density score doubles the base score for single-window documents") {
  const EmbeddingStore store = tiny_store(10, 4, 91);
  AbelDrmmModel model(DrmmConfig{}, store.dim(), 23);
  const TokenizedText query = toks({"tok0", "tok1"});
  const TokenizedText doc = toks({"tok2", "tok3", "tok4", "tok5"});  // 4 tokens < l_w

  const double base = model.score(query, doc, store, kExtras);
  DensityTrace trace;
  const double dens = model.density_score(query, doc, store, kExtras, 20, &trace);
  CHECK(dens == doctest::Approx(2.0 * base).epsilon(1e-12));
  CHECK(trace.window_start == 0);
  CHECK(trace.window_len == 4);
}

TEST_CASE("density picks the earliest window on exact ties") {
  const EmbeddingStore store = tiny_store(4, 4, 101);
  AbelDrmmModel model(DrmmConfig{}, store.dim(), 29);
  const TokenizedText query = toks({"tok0"});
  // all-identical tokens: every window scores identically
  const TokenizedText doc = toks({"tok1", "tok1", "tok1", "tok1", "tok1", "tok1"});
  DensityTrace trace;
  (void)model.density_score(query, doc, store, kExtras, 3, &trace);
  CHECK(trace.window_start == 0);
  CHECK(trace.window_len == 3);
}

TEST_CASE("confidence filter keeps 10 equal scores and empties 100 equal scores") {
  AbelExtensionConfig ext;  // t_d = 100, t_c = 0.01
  ext.confidence_enabled = true;

  RankedList ten;
  for (int i = 0; i < 10; ++i) ten.push_back({"d" + std::to_string(i), 2.5});
  sort_ranked(ten);
  const RankedList kept = confidence_filter(ten, ext);
  CHECK(kept.size() == 10);  // each share 0.1 > 0.01

  RankedList hundred;
  for (int i = 0; i < 100; ++i) hundred.push_back({"d" + std::to_string(i), 2.5});
  sort_ranked(hundred);
  CHECK(confidence_filter(hundred, ext).empty());  // 0.01 is not > 0.01

  // entries beyond t_d are dropped before the softmax
  AbelExtensionConfig small = ext;
  small.t_d = 2;
  RankedList three{{"a", 5.0}, {"b", 1.0}, {"c", 0.5}};
  const RankedList top2 = confidence_filter(three, small);
  REQUIRE(!top2.empty());
  CHECK(top2[0].id == "a");
  for (const auto& item : top2) CHECK(item.id != "c");

  CHECK(confidence_filter({}, ext).empty());
}

TEST_CASE("abel-drmm gradcheck (plain and density)") {
  const EmbeddingStore store = tiny_store(12, 4, 111);
  DrmmConfig cfg;
  cfg.mlp_hidden = 4;
  AbelDrmmModel model(cfg, store.dim(), 37);
  const TokenizedText query = toks({"tok0", "tok1"});
  const TokenizedText doc =
      toks({"tok2", "tok3", "tok4", "tok5", "tok6", "tok7", "tok8"});
  auto params = model.parameters();

  const GradCheckReport plain = finite_diff_gradcheck(
      [&] { return model.score(query, doc, store, kExtras); },
      [&] {
        AbelTrace trace;
        const double s = model.score(query, doc, store, kExtras, &trace);
        model.backward(1.0, trace);
        return s;
      },
      params);
  INFO("plain worst ", plain.worst_parameter, " rel ", plain.max_rel_error);
  CHECK(plain.max_rel_error <= 1e-5);

  const std::size_t l_w = 5;  // doc has 7 tokens -> 3 windows
  const GradCheckReport dens = finite_diff_gradcheck(
      [&] { return model.density_score(query, doc, store, kExtras, l_w); },
      [&] {
        DensityTrace trace;
        const double s = model.density_score(query, doc, store, kExtras, l_w, &trace);
        model.density_backward(1.0, trace);
        return s;
      },
      params);
  INFO("density worst ", dens.worst_parameter, " rel ", dens.max_rel_error);
  CHECK(dens.max_rel_error <= 1e-5);
}

// ---------------------------------------------------------------------------
// BCNN
// ---------------------------------------------------------------------------

TEST_CASE("wide 1-d convolution on a hand example") {
  // seq [T=2, D=1] = [1, 2]; one filter, width 2: taps K[0][0]=3, K[0][1]=5
  Parameter filters("f", Tensor({1, 2, 1}, {3.0, 5.0}));
  const Tensor seq({2, 1}, {1.0, 2.0});
  const Tensor out = conv1d_wide(seq, filters);
  REQUIRE(out.shape() == std::vector<std::size_t>{3, 1});
  CHECK(out(0, 0) == 5.0);   // K[0][1] * seq[0]
  CHECK(out(1, 0) == 13.0);  // 3*1 + 5*2
  CHECK(out(2, 0) == 6.0);   // 3*2

  // single-token input still emits w outputs
  const Tensor single = conv1d_wide(Tensor({1, 1}, {4.0}), filters);
  REQUIRE(single.shape() == std::vector<std::size_t>{2, 1});
  CHECK(single(0, 0) == 20.0);
  CHECK(single(1, 0) == 12.0);

  // zero filters: exactly zero everywhere (no bias)
  Parameter zero_f("z", Tensor({1, 2, 1}));
  const Tensor zeros = conv1d_wide(seq, zero_f);
  CHECK(zeros(0, 0) == 0.0);
  CHECK(zeros(2, 0) == 0.0);
}

TEST_CASE("conv block restores the input length") {
  Rng rng(3);
  Parameter filters("f", Tensor({3, 2, 2}));
  for (double& v : filters.value.flat()) v = rng.uniform(-0.5, 0.5);
  Tensor seq({5, 2});
  for (double& v : seq.flat()) v = rng.uniform(-1.0, 1.0);
  const Tensor out = conv_block(seq, filters, 2);
  CHECK(out.shape() == std::vector<std::size_t>{5, 3});
  for (const double v : out.flat()) {
    CHECK(v >= -1.0);  // tanh output averaged stays in [-1, 1]
    CHECK(v <= 1.0);
  }
}

TEST_CASE("stream features ignore appended masked padding") {
  const EmbeddingStore store = tiny_store(8, 4, 121);
  BcnnConfig cfg;
  cfg.n_filters = 3;
  cfg.filter_width = 2;
  BcnnModel model(cfg, store.dim(), 41);

  const Tensor seq = model.embed_sequence({"tok0", "tok1", "tok2"}, store);
  const std::vector<std::uint8_t> mask{1, 1, 1};
  const std::vector<Tensor> feats = model.stream_features(seq, mask);

  Tensor padded({5, 4});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t d = 0; d < 4; ++d) padded(i, d) = seq(i, d);
  const std::vector<std::uint8_t> padded_mask{1, 1, 1, 0, 0};
  const std::vector<Tensor> padded_feats = model.stream_features(padded, padded_mask);

  REQUIRE(feats.size() == padded_feats.size());
  for (std::size_t b = 0; b < feats.size(); ++b) {
    REQUIRE(feats[b].numel() == padded_feats[b].numel());
    for (std::size_t i = 0; i < feats[b].numel(); ++i) {
      CHECK(feats[b][i] == doctest::Approx(padded_feats[b][i]).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS((void)block_feature_vector(Tensor({2, 3}), std::vector<std::uint8_t>{0, 0}),
                  std::invalid_argument);
}

TEST_CASE("bcnn score is the sigmoid of the logit; long snippets truncate") {
  const EmbeddingStore store = tiny_store(10, 4, 131);
  BcnnConfig cfg;
  cfg.n_filters = 3;
  cfg.filter_width = 2;
  cfg.max_snippet_tokens = 4;
  BcnnModel model(cfg, store.dim(), 43);

  const TokenizedText query = toks({"tok0", "tok1"});
  const TokenizedText snippet = toks({"tok2", "tok3", "tok4", "tok5"});
  const double logit = model.logit(query, snippet, store, kExtras);
  const double score = model.bcnn_score(query, snippet, store, kExtras);
  CHECK(score == doctest::Approx(1.0 / (1.0 + std::exp(-logit))).epsilon(1e-15));
  CHECK(score > 0.0);
  CHECK(score < 1.0);

  // adding tokens beyond the cap does not change the logit
  TokenizedText longer = snippet;
  longer.tokens.push_back("tok6");
  longer.spans.emplace_back(90, 94);
  longer.tokens.push_back("tok7");
  longer.spans.emplace_back(95, 99);
  CHECK(model.logit(query, longer, store, kExtras) == logit);

  // queries are never truncated: 5 > max_snippet_tokens still scores
  const TokenizedText long_query = toks({"tok0", "tok1", "tok2", "tok3", "tok4"});
  CHECK_NOTHROW((void)model.logit(long_query, snippet, store, kExtras));

  CHECK_THROWS_AS((void)model.logit(TokenizedText{}, snippet, store, kExtras),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)model.logit(query, TokenizedText{}, store, kExtras),
                  std::invalid_argument);
}

TEST_CASE("bcnn gradcheck through the logit") {
  const EmbeddingStore store = tiny_store(10, 4, 141);
  BcnnConfig cfg;
  cfg.n_filters = 3;
  cfg.filter_width = 2;
  cfg.n_blocks = 2;
  BcnnModel model(cfg, store.dim(), 47);
  const TokenizedText query = toks({"tok0", "tok1", "tok2"});
  const TokenizedText snippet = toks({"tok3", "tok4", "tok5", "tok6"});
  auto params = model.parameters();
  const GradCheckReport report = finite_diff_gradcheck(
      [&] { return model.logit(query, snippet, store, kExtras); },
      [&] {
        BcnnTrace trace;
        const double s = model.logit(query, snippet, store, kExtras, &trace);
        model.backward(1.0, trace);
        return s;
      },
      params);
  INFO("worst ", report.worst_parameter, " rel ", report.max_rel_error);
  CHECK(report.max_rel_error <= 1e-5);
}

// ---------------------------------------------------------------------------
// Sentence labeling and snippet post-processing
// ---------------------------------------------------------------------------

TEST_CASE("label_sentences marks overlap with gold spans") {
  const Document doc = make_document(
      "docA", "Insulin study.", "Insulin lowers glucose. Plaques are unrelated.");
  // document text: "Insulin study. Insulin lowers glucose. Plaques are unrelated."
  const std::string text = document_text(doc);
  const std::size_t second = text.find("Insulin lowers");
  const std::vector<std::pair<std::size_t, std::size_t>> gold{
      {second, second + 10}};  // overlaps sentence 2 only

  const std::vector<SnippetCandidate> cands = label_sentences(doc, gold, 40);
  REQUIRE(cands.size() == 3);
  CHECK(cands[0].label == 0);
  CHECK(cands[1].label == 1);
  CHECK(cands[2].label == 0);
  CHECK(cands[0].doc_id == "docA");
  CHECK(cands[1].sentence_index == 1);
  CHECK(cands[1].span.text == "Insulin lowers glucose.");
  CHECK_FALSE(cands[1].tokens.empty());

  // a one-character overlap at the boundary still counts
  const std::vector<std::pair<std::size_t, std::size_t>> edge{{second, second + 1}};
  CHECK(label_sentences(doc, edge, 40)[1].label == 1);

  const std::vector<std::pair<std::size_t, std::size_t>> bad{{0, text.size() + 50}};
  CHECK_THROWS_WITH_AS((void)label_sentences(doc, bad, 40), doctest::Contains("docA"),
                       std::runtime_error);
}

TEST_CASE("rank_and_postprocess selects by bcnn score then groups by doc score") {
  const auto mk = [](const std::string& doc, std::size_t idx, double doc_score,
                     double bcnn) {
    SnippetCandidate c;
    c.doc_id = doc;
    c.sentence_index = idx;
    c.doc_score = doc_score;
    c.bcnn_score = bcnn;
    return c;
  };
  std::vector<SnippetCandidate> cands{
      mk("low", 0, 1.0, 0.9),   // best bcnn, weakest doc
      mk("high", 0, 3.0, 0.5),
      mk("high", 1, 3.0, 0.7),
      mk("mid", 0, 2.0, 0.6),
      mk("mid", 1, 2.0, 0.1),   // dropped at k_s = 4
  };
  const std::vector<SnippetCandidate> out = rank_and_postprocess(cands, 4);
  REQUIRE(out.size() == 4);
  // final order: doc_score desc, bcnn desc, sentence_index asc
  CHECK(out[0].doc_id == "high");
  CHECK(out[0].sentence_index == 1);  // bcnn 0.7 over 0.5
  CHECK(out[1].doc_id == "high");
  CHECK(out[2].doc_id == "mid");
  CHECK(out[2].sentence_index == 0);
  CHECK(out[3].doc_id == "low");

  // selection stage ties: lower doc id, then lower sentence index
  std::vector<SnippetCandidate> ties{
      mk("b", 0, 1.0, 0.5),
      mk("a", 1, 1.0, 0.5),
      mk("a", 0, 1.0, 0.5),
  };
  const std::vector<SnippetCandidate> picked = rank_and_postprocess(ties, 2);
  REQUIRE(picked.size() == 2);
  CHECK(picked[0].doc_id == "a");
  CHECK(picked[0].sentence_index == 0);
  CHECK(picked[1].doc_id == "a");
  CHECK(picked[1].sentence_index == 1);
}
