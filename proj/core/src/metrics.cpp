#include "bioir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bioir {

double eval_map10(const RankedList& run, const std::set<std::string>& relevant) {
  const std::size_t depth = std::min<std::size_t>(run.size(), 10);
  double hits = 0.0;
  double ap_sum = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (relevant.count(run[r].id) != 0) {
      hits += 1.0;
      ap_sum += hits / static_cast<double>(r + 1);
    }
  }
  return ap_sum / 10.0;
}

double eval_f1(const RankedList& run, const std::set<std::string>& relevant) {
  if (run.empty() || relevant.empty()) return 0.0;
  double hits = 0.0;
  for (const ScoredId& entry : run) {
    if (relevant.count(entry.id) != 0) hits += 1.0;
  }
  const double precision = hits / static_cast<double>(run.size());
  const double recall = hits / static_cast<double>(relevant.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double eval_gmap(const std::vector<double>& ap_values, double epsilon) {
  if (ap_values.empty()) throw std::invalid_argument("eval_gmap: empty AP list");
  double log_sum = 0.0;
  for (const double ap : ap_values) log_sum += std::log(ap + epsilon);
  return std::exp(log_sum / static_cast<double>(ap_values.size()));
}

bool spans_overlap(std::size_t b1, std::size_t e1, std::size_t b2, std::size_t e2) {
  return b1 < e2 && b2 < e1;
}

namespace {

bool hits_any_gold(const SnippetRef& s, const std::vector<SnippetRef>& gold) {
  for (const SnippetRef& g : gold) {
    if (g.doc_id == s.doc_id && spans_overlap(s.begin_char, s.end_char, g.begin_char, g.end_char)) {
      return true;
    }
  }
  return false;
}

}  // namespace

double snippet_ap10(const std::vector<SnippetRef>& run, const std::vector<SnippetRef>& gold) {
  const std::size_t depth = std::min<std::size_t>(run.size(), 10);
  double hits = 0.0;
  double ap_sum = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (hits_any_gold(run[r], gold)) {
      hits += 1.0;
      ap_sum += hits / static_cast<double>(r + 1);
    }
  }
  return ap_sum / 10.0;
}

double snippet_f1(const std::vector<SnippetRef>& run, const std::vector<SnippetRef>& gold) {
  if (run.empty() || gold.empty()) return 0.0;
  double hits = 0.0;
  for (const SnippetRef& s : run) {
    if (hits_any_gold(s, gold)) hits += 1.0;
  }
  double covered = 0.0;
  for (const SnippetRef& g : gold) {
    for (const SnippetRef& s : run) {
      if (s.doc_id == g.doc_id &&
          spans_overlap(s.begin_char, s.end_char, g.begin_char, g.end_char)) {
        covered += 1.0;
        break;
      }
    }
  }
  const double precision = hits / static_cast<double>(run.size());
  const double recall = covered / static_cast<double>(gold.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace bioir
