#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "bioir/ranking.hpp"

namespace bioir {

/// Average precision with the fixed denominator 10 (the challenge convention:
/// every query is assumed to have 10 relevant items). Only the first 10
/// positions of the run are examined.
double eval_map10(const RankedList& run, const std::set<std::string>& relevant);

/// Set-based F1 of the returned ids vs the relevant set; 0 when P + R = 0.
double eval_f1(const RankedList& run, const std::set<std::string>& relevant);

/// exp(mean of ln(AP + epsilon)). Throws std::invalid_argument on empty input.
double eval_gmap(const std::vector<double>& ap_values, double epsilon = 1e-5);

/// A returned snippet span within a document.
struct SnippetRef {
  std::string doc_id;
  std::size_t begin_char = 0;
  std::size_t end_char = 0;
};

/// True iff the two [begin, end) spans share at least one character.
bool spans_overlap(std::size_t b1, std::size_t e1, std::size_t b2, std::size_t e2);

/// Snippet-level AP@10: position r is a hit iff the returned span overlaps
/// any gold span of the same document in >= 1 character; denominator 10.
double snippet_ap10(const std::vector<SnippetRef>& run, const std::vector<SnippetRef>& gold);

/// Snippet-level F1: precision = hits / |run|; recall = covered gold spans /
/// |gold| (a gold span is covered when >= 1 returned span overlaps it).
double snippet_f1(const std::vector<SnippetRef>& run, const std::vector<SnippetRef>& gold);

}  // namespace bioir
