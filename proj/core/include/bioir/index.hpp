#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bioir/ranking.hpp"
#include "bioir/textprep.hpp"

namespace bioir {

struct Document {
  std::string id;
  std::string title;
  std::string abstract;
  TokenizedText tokens;  // over title + " " + abstract
};

/// Tokenizes title + " " + abstract (the retrieval text of a document).
Document make_document(std::string id, std::string title, std::string abstract);

/// The text the token spans index into.
std::string document_text(const Document& doc);

struct Bm25Config {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;  // k1 >= 0, 0 <= b <= 1
};

struct Posting {
  std::string doc_id;
  std::size_t tf = 0;
};

/// Immutable inverted index with BM25 scoring. Documents whose abstract is
/// empty (or that tokenize to nothing) are skipped at build time and counted.
class InvertedIndex {
 public:
  static InvertedIndex build(std::vector<Document> corpus,
                             const std::vector<std::string>& stopwords,
                             const Stemmer& stemmer = identity_stemmer());

  std::size_t n_docs() const { return doc_order_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  std::size_t skipped_docs() const { return skipped_docs_; }

  std::size_t doc_length(const std::string& doc_id) const;        // throws std::out_of_range
  const Document& document(const std::string& doc_id) const;      // throws std::out_of_range
  bool has_document(const std::string& doc_id) const;
  const std::vector<std::string>& doc_ids() const { return doc_order_; }

  std::size_t df(const std::string& term) const;  // 0 for unseen terms

  /// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); unseen term -> df = 0.
  double idf_value(const std::string& term) const;

  /// Sum over unique query terms of idf(t) * tf * (k1+1) / (tf + k1 * (1 - b + b*len/avg)).
  /// Throws std::out_of_range for an unknown doc_id.
  double bm25_score(const Bm25Config& cfg, const TokenizedText& query,
                    const std::string& doc_id) const;

  /// Top-N doc ids by BM25, score descending, ties by ascending doc_id; only
  /// positive-scoring documents are returned.
  RankedList retrieve_top_n(const Bm25Config& cfg, const TokenizedText& query,
                            std::size_t n) const;

  /// idf_value over every indexed term (for seeding an idf table).
  std::unordered_map<std::string, double> idf_table() const;

  const std::vector<std::string>& stopwords() const { return stopwords_; }

  /// Versioned JSON persistence. The file stores the raw documents and the
  /// stopword list; load() rebuilds the postings (identity stemmer).
  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

 private:
  std::map<std::string, std::vector<Posting>> postings_;  // term -> postings by doc_id asc
  std::unordered_map<std::string, std::size_t> doc_lengths_;
  std::unordered_map<std::string, Document> docs_;
  std::vector<std::string> doc_order_;  // ingestion order of indexed docs
  std::vector<std::string> stopwords_;
  double avg_doc_length_ = 0.0;
  std::size_t skipped_docs_ = 0;
};

}  // namespace bioir
