#pragma once

#include <string>
#include <vector>

namespace bioir {

struct ScoredId {
  std::string id;
  double score = 0.0;
};

/// Always kept sorted by (score descending, id ascending).
using RankedList = std::vector<ScoredId>;

/// Sorts in place by score descending, ties by ascending id.
void sort_ranked(RankedList& list);

}  // namespace bioir
