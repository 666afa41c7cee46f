#include "bioir/formats.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <json.hpp>

namespace bioir {

namespace {

/// Applies fn to each parsed JSON-lines object; wraps errors with file:line.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
      fn(obj);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<Document> load_corpus_jsonl(const std::string& path) {
  std::vector<Document> docs;
  for_each_jsonl(path, [&](const nlohmann::json& obj) {
    docs.push_back(make_document(obj.at("id").get<std::string>(),
                                 obj.at("title").get<std::string>(),
                                 obj.at("abstract").get<std::string>()));
  });
  return docs;
}

std::vector<QueryRecord> load_queries_jsonl(const std::string& path) {
  std::vector<QueryRecord> queries;
  for_each_jsonl(path, [&](const nlohmann::json& obj) {
    queries.push_back(QueryRecord{obj.at("id").get<std::string>(),
                                  obj.at("body").get<std::string>()});
  });
  return queries;
}

std::vector<QrelRecord> load_qrels_jsonl(const std::string& path) {
  std::vector<QrelRecord> qrels;
  for_each_jsonl(path, [&](const nlohmann::json& obj) {
    QrelRecord rec;
    rec.query_id = obj.at("query_id").get<std::string>();
    rec.relevant_docs = obj.at("relevant_docs").get<std::vector<std::string>>();
    if (obj.contains("gold_snippets")) {
      for (const auto& s : obj.at("gold_snippets")) {
        rec.gold_snippets.push_back(SnippetRef{s.at("doc_id").get<std::string>(),
                                               s.at("begin_char").get<std::size_t>(),
                                               s.at("end_char").get<std::size_t>()});
      }
    }
    qrels.push_back(std::move(rec));
  });
  return qrels;
}

void save_run_jsonl(const std::string& path, const std::vector<RunRecord>& runs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const RunRecord& run : runs) {
    nlohmann::json obj;
    obj["query_id"] = run.query_id;
    nlohmann::json docs = nlohmann::json::array();
    for (const ScoredId& d : run.documents) docs.push_back(d.id);
    obj["documents"] = std::move(docs);
    nlohmann::json snippets = nlohmann::json::array();
    for (const ScoredSnippet& s : run.snippets) {
      snippets.push_back({{"doc_id", s.ref.doc_id},
                          {"begin_char", s.ref.begin_char},
                          {"end_char", s.ref.end_char}});
    }
    obj["snippets"] = std::move(snippets);
    out << obj.dump() << '\n';
  }
}

std::vector<RunRecord> load_run_jsonl(const std::string& path) {
  std::vector<RunRecord> runs;
  for_each_jsonl(path, [&](const nlohmann::json& obj) {
    RunRecord run;
    run.query_id = obj.at("query_id").get<std::string>();
    const auto& docs = obj.at("documents");
    for (std::size_t i = 0; i < docs.size(); ++i) {
      run.documents.push_back(ScoredId{docs[i].get<std::string>(),
                                       static_cast<double>(docs.size() - i)});
    }
    if (obj.contains("snippets")) {
      const auto& snippets = obj.at("snippets");
      for (std::size_t i = 0; i < snippets.size(); ++i) {
        const auto& s = snippets[i];
        run.snippets.push_back(ScoredSnippet{SnippetRef{s.at("doc_id").get<std::string>(),
                                                        s.at("begin_char").get<std::size_t>(),
                                                        s.at("end_char").get<std::size_t>()},
                                             static_cast<double>(snippets.size() - i)});
      }
    }
    runs.push_back(std::move(run));
  });
  return runs;
}

void save_run_trec(const std::string& path, const std::vector<RunRecord>& runs,
                   const std::string& tag) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << std::setprecision(17);
  for (const RunRecord& run : runs) {
    for (std::size_t i = 0; i < run.documents.size(); ++i) {
      out << run.query_id << " Q0 " << run.documents[i].id << ' ' << (i + 1) << ' '
          << run.documents[i].score << ' ' << tag << '\n';
    }
  }
}

}  // namespace bioir
