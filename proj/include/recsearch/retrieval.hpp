#pragma once

// Top-k orchestration over the dense indexes, BM25 and their fusion, with
// post-retrieval hard filters and metadata enrichment.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recsearch/encoder.hpp"
#include "recsearch/index.hpp"
#include "recsearch/quant.hpp"
#include "recsearch/sparse.hpp"
#include "recsearch/store.hpp"

namespace recsearch {

enum class Mode { Dense, Sparse, Hybrid };
enum class Engine { Flat, Hnsw };
enum class Precision { Fp32, Int8 };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(Engine e) noexcept;
std::string_view to_string(Precision p) noexcept;
Mode parse_mode(std::string_view s);
Engine parse_engine(std::string_view s);
Precision parse_precision(std::string_view s);

struct Filter {
  std::string field;
  std::string value;
};

inline constexpr std::size_t kHybridCandidateFactor = 4;

struct RetrievalRequest {
  std::string query_text;
  std::size_t k = 10;
  Mode mode = Mode::Dense;
  double lambda = 0.5;
  std::vector<Filter> filters;
  Engine engine = Engine::Flat;
  std::optional<std::size_t> ef_search;
  Precision precision = Precision::Fp32;

  void validate() const;
};

struct SourceScores {
  std::optional<double> dense;
  std::optional<double> sparse;
};

struct RankedResult {
  std::string item_id;
  double score = 0.0;
  std::size_t rank = 0;
  SourceScores source_scores;
  std::optional<DisplayRecord> display;  // nullopt: not found in the cache
};

struct StageTimings {
  double encode_ms = 0.0;
  double search_ms = 0.0;
  double lookup_ms = 0.0;
  double total_ms = 0.0;
};

/// Loaded artifacts; immutable once finalize() has run.
class System {
 public:
  std::optional<EncoderModel<float>> model;
  std::optional<QuantizedModel> qmodel;
  std::optional<FlatIndex> flat;
  std::optional<HnswIndex> hnsw;
  std::optional<Bm25Index> bm25;
  std::optional<MetadataCache> cache;

  /// Builds id lookups over the dense vectors; call after assigning artifacts.
  void finalize();

  /// Vectors used for exact dense scores: the flat index, else the HNSW one.
  const EmbeddingMatrix* dense_vectors() const noexcept;
  std::optional<std::uint32_t> dense_row(std::string_view item_id) const;

  Embedding<float> encode_query(std::string_view text, Precision precision) const;

 private:
  std::unordered_map<std::string, std::uint32_t> row_of_;
};

std::vector<RankedResult> retrieve(const System& system, const RetrievalRequest& req,
                                   StageTimings* timings = nullptr);

/// Per-side min-max normalization (constant side -> 0.5; a missing score takes
/// that side's minimum), then lambda * dense + (1 - lambda) * sparse.
std::vector<double> fuse_scores(std::span<const std::optional<double>> dense,
                                std::span<const std::optional<double>> sparse, double lambda);

/// Case-insensitive equality on display fields; items lacking the field are
/// dropped. Ranks are re-compacted. Throws UnknownField.
std::vector<RankedResult> apply_filters(std::vector<RankedResult> results,
                                        std::span<const Filter> filters);

void validate_filters(std::span<const Filter> filters);

}  // namespace recsearch
