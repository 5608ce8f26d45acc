#pragma once

// Okapi BM25 over an inverted index.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recsearch/ranking.hpp"
#include "recsearch/textproc.hpp"

namespace recsearch {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
  bool operator==(const Bm25Params&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Immutable after build. Doc ordinals follow ascending item_id, so the index
/// contents do not depend on corpus insertion order.
class Bm25Index {
 public:
  Bm25Params params;
  std::vector<std::string> doc_ids;
  std::vector<std::uint32_t> doc_len;
  double avgdl = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings;

  std::size_t n_docs() const noexcept { return doc_ids.size(); }
  std::size_t df(std::string_view term) const;
  std::uint32_t tf(std::string_view term, std::uint32_t doc) const;
  /// Ordinal of item_id; throws UnknownDoc.
  std::uint32_t ordinal(std::string_view item_id) const;
  bool contains(std::string_view item_id) const;

  /// Rebuilds derived lookup tables after fields are filled in directly.
  void reindex();

 private:
  std::unordered_map<std::string, std::uint32_t> ordinal_of_;
};

using Bm25Corpus = std::vector<std::pair<std::string, TokenSeq>>;

Bm25Index build_bm25(const Bm25Corpus& corpus, const Bm25Params& params = {});

/// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
double idf(const Bm25Index& index, std::string_view term);

double bm25_score(const Bm25Index& index, const TokenSeq& query, std::string_view item_id);

/// Documents sharing at least one term with the query, best first. A query
/// with no indexed term returns an empty list.
std::vector<ScoredItem> bm25_topk(const Bm25Index& index, const TokenSeq& query, std::size_t k);

std::string serialize_bm25(const Bm25Index& index);
Bm25Index deserialize_bm25(std::string_view bytes);
void save_bm25(const Bm25Index& index, const std::filesystem::path& path);
Bm25Index load_bm25(const std::filesystem::path& path);

}  // namespace recsearch
