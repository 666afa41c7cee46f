#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bioir/index.hpp"
#include "bioir/metrics.hpp"
#include "bioir/ranking.hpp"

namespace bioir {

// JSON-lines external interfaces. One JSON object per line; parse errors
// raise std::runtime_error naming the file and line.

/// Corpus line: {"id": ..., "title": ..., "abstract": ...}
std::vector<Document> load_corpus_jsonl(const std::string& path);

struct QueryRecord {
  std::string id;
  std::string body;
};

/// Query line: {"id": ..., "body": ...}
std::vector<QueryRecord> load_queries_jsonl(const std::string& path);

struct QrelRecord {
  std::string query_id;
  std::vector<std::string> relevant_docs;
  std::vector<SnippetRef> gold_snippets;  // {doc_id, begin_char, end_char}
};

/// Qrels line: {"query_id": ..., "relevant_docs": [...],
///              "gold_snippets": [{"doc_id", "begin_char", "end_char"}]}
std::vector<QrelRecord> load_qrels_jsonl(const std::string& path);

struct ScoredSnippet {
  SnippetRef ref;
  double score = 0.0;
};

struct RunRecord {
  std::string query_id;
  RankedList documents;                 // scores kept internally
  std::vector<ScoredSnippet> snippets;  // already in final order
};

/// Run line: {"query_id": ..., "documents": [id, ...],
///            "snippets": [{"doc_id", "begin_char", "end_char"}, ...]}.
/// Scores are not serialized; loading assigns descending placeholder scores
/// so rank order round-trips.
void save_run_jsonl(const std::string& path, const std::vector<RunRecord>& runs);
std::vector<RunRecord> load_run_jsonl(const std::string& path);

/// TREC 6-column document run: query_id Q0 doc_id rank score tag.
void save_run_trec(const std::string& path, const std::vector<RunRecord>& runs,
                   const std::string& tag);

}  // namespace bioir
