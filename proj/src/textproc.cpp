#include "recsearch/textproc.hpp"

#include <cctype>
#include <cstdint>

#include "recsearch/error.hpp"
#include "recsearch/ingest.hpp"

namespace recsearch {
namespace {

// Decodes one UTF-8 code point at text[pos]; returns its byte length.
// Invalid bytes decode as themselves with length 1.
std::size_t decode_utf8(std::string_view text, std::size_t pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  std::size_t len = 1;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = b0;
    return 1;
  }
  if (pos + len > text.size()) {
    cp = b0;
    return 1;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(text[pos + i]);
    if ((b & 0xC0) != 0x80) {
      cp = b0;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(char c) {
  return static_cast<unsigned char>(c) < 0x80 && std::ispunct(static_cast<unsigned char>(c));
}

void push_token(std::string_view raw, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && is_ascii_punct(raw[begin])) ++begin;
  while (end > begin && is_ascii_punct(raw[end - 1])) --end;
  if (begin == end) return;
  std::string token(raw.substr(begin, end - begin));
  for (char& c : token) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  out.push_back(std::move(token));
}

std::size_t utf8_floor(std::string_view s, std::size_t n) {
  if (n >= s.size()) return s.size();
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  return n;
}

bool blank(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    const std::size_t len = decode_utf8(text, pos, cp);
    if (is_unicode_space(cp)) {
      if (pos > start) push_token(text.substr(start, pos - start), seq.tokens);
      start = pos + len;
    }
    pos += len;
  }
  if (pos > start) push_token(text.substr(start, pos - start), seq.tokens);
  return seq;
}

TokenSeq truncate_tokens(TokenSeq seq, std::size_t max_len) {
  if (max_len == 0) throw Error(ErrorCode::InvalidArgument, "max_len must be >= 1");
  if (seq.tokens.size() > max_len) {
    seq.tokens.resize(max_len);
    seq.truncated_at = max_len;
  }
  return seq;
}

std::string join_tokens(const TokenSeq& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += seq.tokens[i];
  }
  return out;
}

std::string render_document(const CatalogItem& item, std::size_t max_chars) {
  if (item.title.empty()) throw Error(ErrorCode::MissingTitle, "item " + item.item_id);
  std::string out = item.title;
  out += " [SEP] ";
  if (item.brand) out += *item.brand;
  out += " [SEP] ";
  for (std::size_t i = 0; i < item.features.size(); ++i) {
    if (i) out += "; ";
    out += item.features[i];
  }
  out.resize(utf8_floor(out, max_chars));
  return out;
}

std::string render_query(const Review& review, QueryMode mode) {
  const bool has_summary = !blank(review.summary);
  const bool has_body = !blank(review.body);
  if (!has_summary && !has_body) {
    throw Error(ErrorCode::EmptyReview, "review by " + review.user_id + " on " + review.item_id);
  }
  if (mode == QueryMode::Train) {
    if (!has_summary) return review.body;
    if (!has_body) return review.summary;
    return review.summary + " " + review.body;
  }
  if (has_summary) return review.summary;
  return join_tokens(truncate_tokens(tokenize(review.body), kEvalQueryTokens));
}

double ascii_letter_ratio(std::string_view text) {
  std::size_t ascii = 0;
  std::size_t letters = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    const std::size_t len = decode_utf8(text, pos, cp);
    if (cp < 0x80) {
      if (std::isalpha(static_cast<int>(cp))) {
        ++ascii;
        ++letters;
      }
    } else if (!is_unicode_space(cp)) {
      ++letters;
    }
    pos += len;
  }
  return letters == 0 ? 1.0 : static_cast<double>(ascii) / static_cast<double>(letters);
}

}  // namespace recsearch
