#pragma once

// Tokenization and the query/document text-rendering rules.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace recsearch {

struct CatalogItem;
struct Review;

inline constexpr std::size_t kMaxSeqLen = 500;
inline constexpr std::size_t kMaxDocChars = 1200;
inline constexpr std::size_t kEvalQueryTokens = 20;

struct TokenSeq {
  std::vector<std::string> tokens;
  std::optional<std::size_t> truncated_at;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  bool operator==(const TokenSeq&) const = default;
};

/// Lowercase, split on Unicode whitespace, strip leading/trailing ASCII
/// punctuation from each token, drop empties.
TokenSeq tokenize(std::string_view text);

TokenSeq truncate_tokens(TokenSeq seq, std::size_t max_len);

std::string join_tokens(const TokenSeq& seq);

/// "title [SEP] brand [SEP] f1; f2; ..." cut to at most max_chars bytes
/// (backing off to a UTF-8 boundary).
std::string render_document(const CatalogItem& item, std::size_t max_chars = kMaxDocChars);

enum class QueryMode { Train, EvalHard };

std::string render_query(const Review& review, QueryMode mode);

/// Share of ASCII letters among alphabetic characters (non-ASCII code points
/// count as alphabetic). Returns 1.0 for text with no letters.
double ascii_letter_ratio(std::string_view text);

}  // namespace recsearch
