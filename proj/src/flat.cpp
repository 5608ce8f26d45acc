#include <algorithm>
#include <numeric>

#include "recsearch/index.hpp"

namespace recsearch {

std::vector<ScoredItem> flat_search(const FlatIndex& index, const Embedding<float>& q,
                                    std::size_t k) {
  const auto& m = index.vectors;
  if (m.size() == 0) throw Error(ErrorCode::EmptyIndex, "flat index is empty");
  if (!q.normalized) throw Error(ErrorCode::NotNormalized, "query must be unit norm");
  if (q.vector.size() != m.dim()) throw Error(ErrorCode::DimMismatch, "query dim");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");

  const Eigen::VectorXf scores = m.vectors * q.vector.transpose();
  std::vector<std::uint32_t> ids(m.size());
  std::iota(ids.begin(), ids.end(), 0u);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return m.item_ids[a] < m.item_ids[b];
  };
  const std::size_t n = std::min(k, ids.size());
  if (n < ids.size()) {
    std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), better);
    ids.resize(n);
  }
  std::sort(ids.begin(), ids.end(), better);
  std::vector<ScoredItem> out;
  out.reserve(n);
  for (std::uint32_t i : ids) out.push_back({m.item_ids[i], static_cast<double>(scores(i))});
  return out;
}

}  // namespace recsearch
