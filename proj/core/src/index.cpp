#include "bioir/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace bioir {

void sort_ranked(RankedList& list) {
  std::stable_sort(list.begin(), list.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
}

Document make_document(std::string id, std::string title, std::string abstract) {
  Document doc;
  doc.id = std::move(id);
  doc.title = std::move(title);
  doc.abstract = std::move(abstract);
  doc.tokens = tokenize(doc.title + " " + doc.abstract);
  return doc;
}

std::string document_text(const Document& doc) { return doc.title + " " + doc.abstract; }

void Bm25Config::validate() const {
  if (k1 < 0.0) throw std::invalid_argument("Bm25Config: k1 must be non-negative");
  if (b < 0.0 || b > 1.0) throw std::invalid_argument("Bm25Config: b must lie in [0, 1]");
}

InvertedIndex InvertedIndex::build(std::vector<Document> corpus,
                                   const std::vector<std::string>& stopwords,
                                   const Stemmer& stemmer) {
  InvertedIndex index;
  index.stopwords_ = stopwords;
  const std::set<std::string> stop(stopwords.begin(), stopwords.end());

  std::size_t total_length = 0;
  for (Document& doc : corpus) {
    if (doc.abstract.empty() || doc.tokens.empty()) {
      index.skipped_docs_ += 1;
      continue;
    }
    if (index.docs_.count(doc.id) != 0) {
      throw std::invalid_argument("InvertedIndex::build: duplicate document id '" + doc.id + "'");
    }
    // Stopwords are excluded from postings but still count toward length.
    std::map<std::string, std::size_t> tf;
    for (const std::string& raw : doc.tokens.tokens) {
      const std::string term = stemmer(raw);
      if (stop.count(term) == 0) tf[term] += 1;
    }
    const std::size_t length = doc.tokens.size();
    index.doc_lengths_.emplace(doc.id, length);
    total_length += length;
    for (const auto& [term, count] : tf) {
      index.postings_[term].push_back(Posting{doc.id, count});
    }
    index.doc_order_.push_back(doc.id);
    index.docs_.emplace(doc.id, std::move(doc));
  }
  for (auto& [term, list] : index.postings_) {
    std::sort(list.begin(), list.end(),
              [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
  }
  index.avg_doc_length_ = index.doc_order_.empty()
                              ? 0.0
                              : static_cast<double>(total_length) /
                                    static_cast<double>(index.doc_order_.size());
  return index;
}

std::size_t InvertedIndex::doc_length(const std::string& doc_id) const {
  const auto it = doc_lengths_.find(doc_id);
  if (it == doc_lengths_.end()) {
    throw std::out_of_range("InvertedIndex: unknown document '" + doc_id + "'");
  }
  return it->second;
}

const Document& InvertedIndex::document(const std::string& doc_id) const {
  const auto it = docs_.find(doc_id);
  if (it == docs_.end()) {
    throw std::out_of_range("InvertedIndex: unknown document '" + doc_id + "'");
  }
  return it->second;
}

bool InvertedIndex::has_document(const std::string& doc_id) const {
  return docs_.count(doc_id) != 0;
}

std::size_t InvertedIndex::df(const std::string& term) const {
  const auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

double InvertedIndex::idf_value(const std::string& term) const {
  const double n = static_cast<double>(n_docs());
  const double d = static_cast<double>(df(term));
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

namespace {

/// Unique tokens in first-appearance order (keeps scoring order deterministic).
std::vector<std::string> unique_terms(const TokenizedText& text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& t : text.tokens) {
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

}  // namespace

double InvertedIndex::bm25_score(const Bm25Config& cfg, const TokenizedText& query,
                                 const std::string& doc_id) const {
  const double len = static_cast<double>(doc_length(doc_id));
  const double avg = avg_doc_length_;
  double score = 0.0;
  for (const std::string& term : unique_terms(query)) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& list = it->second;
    const auto pit = std::lower_bound(
        list.begin(), list.end(), doc_id,
        [](const Posting& p, const std::string& id) { return p.doc_id < id; });
    if (pit == list.end() || pit->doc_id != doc_id) continue;
    const double tf = static_cast<double>(pit->tf);
    const double idf = idf_value(term);
    score += idf * tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * (1.0 - cfg.b + cfg.b * len / avg));
  }
  return score;
}

RankedList InvertedIndex::retrieve_top_n(const Bm25Config& cfg, const TokenizedText& query,
                                         std::size_t n) const {
  if (n == 0) throw std::invalid_argument("retrieve_top_n: N must be at least 1");
  std::set<std::string> candidates;
  for (const std::string& term : unique_terms(query)) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (const Posting& p : it->second) candidates.insert(p.doc_id);
  }
  RankedList ranked;
  ranked.reserve(candidates.size());
  for (const std::string& doc_id : candidates) {
    const double score = bm25_score(cfg, query, doc_id);
    if (score > 0.0) ranked.push_back(ScoredId{doc_id, score});
  }
  sort_ranked(ranked);
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

std::unordered_map<std::string, double> InvertedIndex::idf_table() const {
  std::unordered_map<std::string, double> table;
  table.reserve(postings_.size());
  for (const auto& [term, list] : postings_) table.emplace(term, idf_value(term));
  return table;
}

void InvertedIndex::save(const std::string& path) const {
  nlohmann::json root;
  root["format"] = "bioir-index";
  root["version"] = 1;
  root["stopwords"] = stopwords_;
  root["skipped_docs"] = skipped_docs_;
  nlohmann::json docs = nlohmann::json::array();
  for (const std::string& id : doc_order_) {
    const Document& d = docs_.at(id);
    docs.push_back({{"id", d.id}, {"title", d.title}, {"abstract", d.abstract}});
  }
  root["documents"] = std::move(docs);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("InvertedIndex::save: cannot open " + path);
  out << root.dump(2) << '\n';
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("InvertedIndex::load: cannot open " + path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("InvertedIndex::load: invalid JSON in " + path + ": " + e.what());
  }
  if (root.value("format", "") != "bioir-index" || root.value("version", 0) != 1) {
    throw std::runtime_error("InvertedIndex::load: " + path +
                             " is not a version-1 bioir-index file");
  }
  std::vector<Document> corpus;
  for (const auto& d : root.at("documents")) {
    corpus.push_back(make_document(d.at("id").get<std::string>(),
                                   d.at("title").get<std::string>(),
                                   d.at("abstract").get<std::string>()));
  }
  const auto stopwords = root.at("stopwords").get<std::vector<std::string>>();
  InvertedIndex index = build(std::move(corpus), stopwords);
  index.skipped_docs_ += root.value("skipped_docs", std::size_t{0});
  return index;
}

}  // namespace bioir
