#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace recsearch {

struct ScoredItem {
  std::string item_id;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

/// Ranking order used everywhere: descending score, ties by ascending id.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item_id < b.item_id;
}

/// Keeps the best k of `items` in ranking order.
inline void keep_top_k(std::vector<ScoredItem>& items, std::size_t k) {
  if (items.size() > k) {
    std::nth_element(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(),
                     ranks_before);
    items.resize(k);
  }
  std::sort(items.begin(), items.end(), ranks_before);
}

}  // namespace recsearch
