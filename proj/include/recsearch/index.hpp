#pragma once

// Exact (flat) and approximate (HNSW) maximum-inner-product search over unit
// vectors. Distance inside the graph is 1 - dot; reported scores are dots.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recsearch/encoder.hpp"
#include "recsearch/ranking.hpp"

namespace recsearch {

struct FlatIndex {
  EmbeddingMatrix vectors;
};

/// Exact top-k by dot product. This is the recall oracle for the ANN index.
std::vector<ScoredItem> flat_search(const FlatIndex& index, const Embedding<float>& q,
                                    std::size_t k);

struct HnswParams {
  std::size_t M = 32;
  std::size_t ef_construction = 40;
  std::size_t ef_search = 16;
  std::size_t max_level_cap = 16;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const HnswParams&) const = default;
};

class HnswIndex {
 public:
  HnswParams params;
  EmbeddingMatrix vectors;
  /// links[node][level] for level in [0, level_of[node]].
  std::vector<std::vector<std::vector<std::uint32_t>>> links;
  std::vector<std::uint32_t> level_of;
  std::uint32_t entry_point = 0;
  int max_level = -1;

  std::size_t size() const noexcept { return level_of.size(); }
  bool empty() const noexcept { return level_of.empty(); }
  std::size_t max_degree(int level) const noexcept {
    return level == 0 ? 2 * params.M : params.M;
  }
};

/// Levels are drawn as floor(-ln(U) / ln(M)) from a generator seeded with
/// params.seed, consumed in insertion order.
HnswIndex hnsw_build(EmbeddingMatrix vectors, const HnswParams& params = {});

/// Greedy descent with ef = 1 above level 0, then a beam of max(ef_search, k)
/// at level 0.
std::vector<ScoredItem> hnsw_search(const HnswIndex& index, const Embedding<float>& q,
                                    std::size_t k, std::optional<std::size_t> ef_search = {});

struct HnswAudit {
  std::size_t max_degree_level0 = 0;
  std::size_t max_degree_upper = 0;
  bool degrees_within_caps = true;
  bool edges_valid = true;
  bool entry_has_max_level = true;
  double reachable_fraction = 0.0;  // from the entry point at level 0
  std::size_t graph_bytes = 0;
};

HnswAudit audit(const HnswIndex& index);

std::string serialize_hnsw(const HnswIndex& index);
HnswIndex deserialize_hnsw(std::string_view bytes);
void save_index(const HnswIndex& index, const std::filesystem::path& path);
HnswIndex load_index(const std::filesystem::path& path);

}  // namespace recsearch
