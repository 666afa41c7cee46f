#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bioir/config.hpp"
#include "bioir/formats.hpp"
#include "bioir/textprep.hpp"

using namespace bioir;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

TEST_CASE("tokenize lowercases, splits on punctuation, and records spans") {
  const std::string text = "Insulin-like growth (IGF-1), p53.";
  const TokenizedText t = tokenize(text);
  CHECK(t.tokens == std::vector<std::string>{"insulin", "like", "growth",
                                             "igf", "1", "p53"});
  REQUIRE(t.spans.size() == t.tokens.size());
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    const auto [begin, end] = t.spans[i];
    CHECK(end - begin == t.tokens[i].size());
    // the span must cover the original-cased token
    std::string original = text.substr(begin, end - begin);
    for (char& c : original) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    CHECK(original == t.tokens[i]);
  }
  // spans strictly increasing
  for (std::size_t i = 1; i < t.spans.size(); ++i)
    CHECK(t.spans[i].first >= t.spans[i - 1].second);
}

TEST_CASE("tokenize keeps underscore, backtick, and dollar inside tokens") {
  const TokenizedText t = tokenize("alpha_beta `x` $5 a=b");
  CHECK(t.tokens == std::vector<std::string>{"alpha_beta", "`x`", "$5", "a", "b"});
}

TEST_CASE("tokenize of empty or all-punctuation text is empty") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("... !!! ---").empty());
}

// ---------------------------------------------------------------------------
// Sentence splitting
// ---------------------------------------------------------------------------

TEST_CASE("split_sentences splits on terminators followed by capitals") {
  const std::string text = "Insulin lowers glucose. It is made in the pancreas! Does it?";
  const std::vector<SentenceSpan> s = split_sentences(text);
  REQUIRE(s.size() == 3);
  CHECK(s[0].text == "Insulin lowers glucose.");
  CHECK(s[1].text == "It is made in the pancreas!");
  CHECK(s[2].text == "Does it?");
  // spans index the original text
  CHECK(text.substr(s[1].start_char, s[1].end_char - s[1].start_char) == s[1].text);
}

TEST_CASE("split_sentences suppresses abbreviation and initial splits") {
  const std::vector<SentenceSpan> a =
      split_sentences("Results shown in Fig. 3 were stable. E. coli grew well.");
  REQUIRE(a.size() == 2);
  CHECK(a[0].text == "Results shown in Fig. 3 were stable.");
  CHECK(a[1].text == "E. coli grew well.");

  const std::vector<SentenceSpan> b =
      split_sentences("Dosage was 5 mg, i.e. a small amount. "
                      "Higher doses, e.g. 50 mg, failed.");
  REQUIRE(b.size() == 2);
}

TEST_CASE("split_sentences splits before digits and keeps trailing fragments") {
  const std::vector<SentenceSpan> s =
      split_sentences("The trial ended. 42 patients enrolled");
  REQUIRE(s.size() == 2);
  CHECK(s[0].text == "The trial ended.");
  CHECK(s[1].text == "42 patients enrolled");  // unterminated tail is kept

  // A lowercase continuation does not split: the rule requires an uppercase
  // letter or digit after the terminator.
  const std::vector<SentenceSpan> t =
      split_sentences("The trial ended. final remark follows");
  REQUIRE(t.size() == 1);
  CHECK(t[0].text == "The trial ended. final remark follows");
}

TEST_CASE("split_sentences on empty or blank text yields nothing") {
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   \n\t ").empty());
}

// ---------------------------------------------------------------------------
// Overlap features
// ---------------------------------------------------------------------------

TEST_CASE("overlap features computed on a hand example") {
  const TokenizedText q = tokenize("insulin regulates glucose");
  const TokenizedText d = tokenize("insulin regulates the body and glucose uptake");
  const IdfLookup idf = [](const std::string& tok) {
    if (tok == "insulin") return 3.0;
    if (tok == "regulates") return 2.0;
    if (tok == "glucose") return 1.0;
    return 0.5;
  };
  const std::array<double, 3> f = overlap_features(q, d, idf);
  CHECK(f[0] == doctest::Approx(1.0));                // 3/3 unigrams present
  CHECK(f[1] == doctest::Approx(1.0));                // full idf mass matched
  CHECK(f[2] == doctest::Approx(0.5).epsilon(1e-15)); // "insulin regulates" yes, "regulates glucose" no

  const TokenizedText d2 = tokenize("unrelated text entirely");
  const std::array<double, 3> g = overlap_features(q, d2, idf);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);

  // duplicate query terms count once (set semantics)
  const TokenizedText qq = tokenize("insulin insulin glucose");
  const TokenizedText dd = tokenize("insulin");
  const std::array<double, 3> h = overlap_features(qq, dd, idf);
  CHECK(h[0] == doctest::Approx(0.5));         // {insulin, glucose}: 1 of 2
  CHECK(h[1] == doctest::Approx(3.0 / 4.0));   // idf 3 of (3+1)

  CHECK(overlap_features(TokenizedText{}, d, idf) == std::array<double, 3>{0.0, 0.0, 0.0});
}

// ---------------------------------------------------------------------------
// Key-value config
// ---------------------------------------------------------------------------

TEST_CASE("key-value config parsing, precedence, and typed getters") {
  const std::string body =
      "# a comment\n"
      "\n"
      "bm25.k1 = 1.2\n"
      "pipeline.n = 100\n"
      "flag = true\n"
      "name = hello world  \n"
      "pipeline.n = 50\n";  // later wins
  const KeyValueConfig cfg = KeyValueConfig::parse(body, "inline");
  CHECK(cfg.has("bm25.k1"));
  CHECK_FALSE(cfg.has("missing"));
  CHECK(cfg.get_double("bm25.k1", 0.0) == 1.2);
  CHECK(cfg.get_int("pipeline.n", 0) == 50);  // later assignment wins
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_string("name", "") == "hello world");
  CHECK(cfg.get_double("absent", 7.5) == 7.5);
  CHECK(cfg.get_bool("absent", true));

  CHECK_THROWS_WITH_AS(
      (void)KeyValueConfig::parse("novalue\n", "badfile"),
      doctest::Contains("badfile:1"), std::runtime_error);
  CHECK_THROWS_AS((void)cfg.get_double("name", 0.0), std::runtime_error);
  CHECK_THROWS_AS((void)cfg.get_int("bm25.k1", 0), std::runtime_error);
  CHECK_THROWS_AS((void)cfg.get_bool("name", false), std::runtime_error);
}

TEST_CASE("key-value config load from file reports the path in errors") {
  const auto path = temp_file("bioir_cfg_test.cfg");
  write_text(path, "alpha = 1\nbroken line here\n");
  CHECK_THROWS_WITH_AS((void)KeyValueConfig::load(path.string()),
                       doctest::Contains(":2"), std::runtime_error);
  write_text(path, "alpha = 1\n");
  const KeyValueConfig cfg = KeyValueConfig::load(path.string());
  CHECK(cfg.get_int("alpha", 0) == 1);
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// JSONL formats
// ---------------------------------------------------------------------------

TEST_CASE("corpus, queries, and qrels JSONL round-trip through the loaders") {
  const auto corpus_path = temp_file("bioir_corpus_test.jsonl");
  write_text(corpus_path,
             R"({"id": "d1", "title": "Insulin biology.", "abstract": "Insulin lowers glucose."})"
             "\n"
             R"({"id": "d2", "title": "Amyloid.", "abstract": "Plaques form."})"
             "\n");
  const std::vector<Document> docs = load_corpus_jsonl(corpus_path.string());
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "d1");
  CHECK(docs[0].title == "Insulin biology.");
  CHECK(docs[1].abstract == "Plaques form.");

  const auto queries_path = temp_file("bioir_queries_test.jsonl");
  write_text(queries_path, R"({"id": "q1", "body": "what is insulin"})" "\n");
  const std::vector<QueryRecord> queries = load_queries_jsonl(queries_path.string());
  REQUIRE(queries.size() == 1);
  CHECK(queries[0].id == "q1");
  CHECK(queries[0].body == "what is insulin");

  const auto qrels_path = temp_file("bioir_qrels_test.jsonl");
  write_text(qrels_path,
             R"({"query_id": "q1", "relevant_docs": ["d1"], )"
             R"("gold_snippets": [{"doc_id": "d1", "begin_char": 0, "end_char": 23}]})"
             "\n");
  const std::vector<QrelRecord> qrels = load_qrels_jsonl(qrels_path.string());
  REQUIRE(qrels.size() == 1);
  CHECK(qrels[0].relevant_docs == std::vector<std::string>{"d1"});
  REQUIRE(qrels[0].gold_snippets.size() == 1);
  CHECK(qrels[0].gold_snippets[0].doc_id == "d1");
  CHECK(qrels[0].gold_snippets[0].end_char == 23);

  std::filesystem::remove(corpus_path);
  std::filesystem::remove(queries_path);
  std::filesystem::remove(qrels_path);
}

TEST_CASE("malformed JSONL names the file and line") {
  const auto path = temp_file("bioir_bad_test.jsonl");
  write_text(path, R"({"id": "d1", "title": "t", "abstract": "a"})" "\n" "not json\n");
  CHECK_THROWS_WITH_AS((void)load_corpus_jsonl(path.string()),
                       doctest::Contains(":2"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("run JSONL round-trips rank order; TREC export is well formed") {
  std::vector<RunRecord> runs(1);
  runs[0].query_id = "q1";
  runs[0].documents = {{"docB", 0.9}, {"docA", 0.5}};
  runs[0].snippets.push_back({{"docB", 10, 40}, 0.8});
  runs[0].snippets.push_back({{"docA", 0, 5}, 0.2});

  const auto run_path = temp_file("bioir_run_test.jsonl");
  save_run_jsonl(run_path.string(), runs);
  const std::vector<RunRecord> loaded = load_run_jsonl(run_path.string());
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].query_id == "q1");
  REQUIRE(loaded[0].documents.size() == 2);
  CHECK(loaded[0].documents[0].id == "docB");
  CHECK(loaded[0].documents[1].id == "docA");
  CHECK(loaded[0].documents[0].score > loaded[0].documents[1].score);
  REQUIRE(loaded[0].snippets.size() == 2);
  CHECK(loaded[0].snippets[0].ref.doc_id == "docB");
  CHECK(loaded[0].snippets[0].ref.begin_char == 10);
  CHECK(loaded[0].snippets[0].ref.end_char == 40);

  const auto trec_path = temp_file("bioir_run_test.trec");
  save_run_trec(trec_path.string(), runs, "sys1");
  std::ifstream in(trec_path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].rfind("q1 Q0 docB 1 ", 0) == 0);
  CHECK(lines[0].substr(lines[0].size() - 4) == "sys1");
  CHECK(lines[1].rfind("q1 Q0 docA 2 ", 0) == 0);

  std::filesystem::remove(run_path);
  std::filesystem::remove(trec_path);
}
