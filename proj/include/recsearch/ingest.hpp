#pragma once

// Raw review/metadata parsing, interaction filtering, leakage-free splitting,
// and the synthetic vocabulary-mismatch benchmark generator.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace recsearch {

struct Review {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::string summary;
  std::string body;

  bool operator==(const Review&) const = default;
};

struct CatalogItem {
  std::string item_id;
  std::string title;
  std::optional<std::string> brand;
  std::vector<std::string> features;
  std::optional<std::string> description;
  std::optional<double> price;
  std::optional<std::string> image_url;

  bool operator==(const CatalogItem&) const = default;
};

struct InteractionPair {
  std::string query_text;
  std::string item_id;
  std::string user_id;
  double rating = 0.0;
  /// Hard-benchmark query (summary, or first 20 body tokens). Empty means
  /// "use query_text".
  std::string eval_query_text;

  const std::string& eval_query() const noexcept {
    return eval_query_text.empty() ? query_text : eval_query_text;
  }
  bool operator==(const InteractionPair&) const = default;
};

struct SplitSpec {
  double train_fraction = 0.95;
  std::uint64_t seed = 42;
};

/// JSON key names for the raw dataset files.
struct FieldMap {
  std::string rating = "rating";
  std::string summary = "title";
  std::string body = "text";
  std::string review_item = "asin";
  std::string user = "user_id";
  std::vector<std::string> meta_item = {"parent_asin", "asin"};
  std::string meta_title = "title";
  std::string meta_brand = "store";
  std::string meta_features = "features";
  std::string meta_description = "description";
  std::string meta_price = "price";
  std::string meta_image = "image_url";
};

struct FilterConfig {
  double min_rating = 4.0;
  std::size_t min_body_tokens = 5;
  std::size_t min_user_pairs = 3;
  bool english_only = false;
  double min_ascii_ratio = 0.9;
};

template <typename T>
struct ParseResult {
  std::vector<T> records;
  std::size_t skipped = 0;
};

using Catalog = std::vector<CatalogItem>;

ParseResult<Review> parse_reviews(const std::filesystem::path& path, const FieldMap& fields = {});
ParseResult<CatalogItem> parse_metadata(const std::filesystem::path& path,
                                        const FieldMap& fields = {});

/// Surviving review records after the four filtering stages. Exposed
/// separately so the filter can be re-applied to its own output.
std::vector<Review> filter_reviews(const std::vector<Review>& reviews, const Catalog& catalog,
                                   const FilterConfig& cfg = {});

std::vector<InteractionPair> filter_interactions(const std::vector<Review>& reviews,
                                                 const Catalog& catalog,
                                                 const FilterConfig& cfg = {});

struct SplitResult {
  std::vector<InteractionPair> train;
  std::vector<InteractionPair> test;
};

SplitResult split_pairs(const std::vector<InteractionPair>& pairs, const SplitSpec& spec = {});

struct SyntheticConfig {
  std::size_t n_items = 10000;
  std::size_t n_pairs = 2500;
  std::size_t vocab_size = 200;  // number of latent concepts
  double mismatch_rate = 0.9;
  std::uint64_t seed = 42;
  std::size_t concepts_per_item = 3;
};

struct SyntheticData {
  Catalog catalog;
  std::vector<InteractionPair> pairs;
};

SyntheticData gen_synthetic(const SyntheticConfig& cfg);

// Canonical JSONL files written and read by the pipeline.
void write_catalog(const std::filesystem::path& path, const Catalog& catalog);
Catalog read_catalog(const std::filesystem::path& path);
std::string pairs_to_jsonl(const std::vector<InteractionPair>& pairs);
void write_pairs(const std::filesystem::path& path, const std::vector<InteractionPair>& pairs);
std::vector<InteractionPair> read_pairs(const std::filesystem::path& path);

/// Split manifest JSON: seed, fraction, counts, CRC-32 of each side's JSONL.
std::string split_manifest_json(const SplitSpec& spec, const SplitResult& split);

std::unordered_map<std::string, const CatalogItem*> index_catalog(const Catalog& catalog);

}  // namespace recsearch
