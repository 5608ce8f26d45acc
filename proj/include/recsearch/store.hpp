#pragma once

// Constant-time metadata cache used to enrich retrieval results.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "recsearch/ingest.hpp"

namespace recsearch {

struct DisplayRecord {
  std::string item_id;
  std::string title;
  std::optional<std::string> brand;
  std::optional<double> price;
  std::optional<std::string> image_url;

  bool operator==(const DisplayRecord&) const = default;
};

class MetadataCache {
 public:
  /// Inserts a record; throws DuplicateKey if the id is present.
  void insert(DisplayRecord record);

  /// nullptr means not found.
  const DisplayRecord* lookup(std::string_view item_id) const;

  std::size_t count() const noexcept { return map_.size(); }
  const std::unordered_map<std::string, DisplayRecord>& records() const noexcept { return map_; }
  void reserve(std::size_t n) { map_.reserve(n); }

  bool operator==(const MetadataCache& o) const { return map_ == o.map_; }

 private:
  std::unordered_map<std::string, DisplayRecord> map_;
};

MetadataCache build_cache(const Catalog& catalog);

std::string serialize_cache(const MetadataCache& cache);
MetadataCache deserialize_cache(std::string_view bytes);
void save_cache(const MetadataCache& cache, const std::filesystem::path& path);
MetadataCache load_cache(const std::filesystem::path& path);

}  // namespace recsearch
