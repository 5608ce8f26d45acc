#include <gtest/gtest.h>

#include <string>

#include "recsearch/error.hpp"
#include "recsearch/ingest.hpp"
#include "recsearch/random.hpp"
#include "recsearch/textproc.hpp"

using namespace recsearch;

namespace {

std::vector<std::string> toks(std::string_view s) { return tokenize(s).tokens; }

std::string random_text(Rng& rng, std::size_t n_chars) {
  static const std::string alphabet = "abcXYZ  ,.!?-'\t\n\xC3\xA9\xE2\x80\x83";  // includes é and em space
  std::string out;
  for (std::size_t i = 0; i < n_chars; ++i) out.push_back(alphabet[uniform_index(rng, alphabet.size())]);
  return out;
}

}  // namespace

TEST(Tokenize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(toks("Comfortable Heels!"), (std::vector<std::string>{"comfortable", "heels"}));
  EXPECT_EQ(toks("V-neck, gold  buttons"), (std::vector<std::string>{"v-neck", "gold", "buttons"}));
}

TEST(Tokenize, EmptyAndPunctuationOnly) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("  ... !! ").empty());
}

TEST(Tokenize, SplitsOnUnicodeWhitespace) {
  // U+2003 em space and U+00A0 no-break space.
  EXPECT_EQ(toks("red\xE2\x80\x83shoe\xC2\xA0size"),
            (std::vector<std::string>{"red", "shoe", "size"}));
}

TEST(Tokenize, IdempotentOnJoinedOutput) {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto once = tokenize(random_text(rng, 60));
    const auto twice = tokenize(join_tokens(once));
    EXPECT_EQ(once.tokens, twice.tokens);
    for (const auto& t : once.tokens) EXPECT_FALSE(t.empty());
  }
}

TEST(Truncate, CutsAndRecordsPosition) {
  TokenSeq seq;
  for (int i = 0; i < 600; ++i) seq.tokens.push_back("t" + std::to_string(i));
  const auto cut = truncate_tokens(seq, 500);
  EXPECT_EQ(cut.size(), 500u);
  ASSERT_TRUE(cut.truncated_at.has_value());
  EXPECT_EQ(*cut.truncated_at, 500u);
  EXPECT_EQ(cut.tokens.back(), "t499");
}

TEST(Truncate, NoOpBelowLimit) {
  const auto seq = tokenize("a b c");
  const auto out = truncate_tokens(seq, 500);
  EXPECT_EQ(out.tokens, seq.tokens);
  EXPECT_FALSE(out.truncated_at.has_value());
  EXPECT_TRUE(truncate_tokens(TokenSeq{}, 500).empty());
}

TEST(Truncate, ZeroLimitRejected) {
  EXPECT_THROW(truncate_tokens(tokenize("a"), 0), Error);
}

TEST(RenderDocument, Format) {
  CatalogItem item{"X1", "A", std::string("B"), {"f1", "f2"}, {}, {}, {}};
  EXPECT_EQ(render_document(item), "A [SEP] B [SEP] f1; f2");
  CatalogItem bare{"X2", "A", std::nullopt, {}, {}, {}, {}};
  EXPECT_EQ(render_document(bare), "A [SEP]  [SEP] ");
}

TEST(RenderDocument, TruncatesToMaxChars) {
  CatalogItem item{"X1", std::string(5000 - 16, 'a'), std::string("B"), {"c"}, {}, {}, {}};
  EXPECT_EQ(render_document(item, 100000).size(), 5000u);
  EXPECT_EQ(render_document(item, 1200).size(), 1200u);
}

TEST(RenderDocument, NeverSplitsAMultibyteCharacter) {
  // "é" is two bytes; a 1200 cut would land inside one.
  CatalogItem item{"X1", "a", {}, {}, {}, {}, {}};
  for (int i = 0; i < 700; ++i) item.title += "\xC3\xA9";
  const auto out = render_document(item, 1200);
  EXPECT_LE(out.size(), 1200u);
  EXPECT_EQ(out.size() % 2, 1u);  // "a" + whole two-byte characters
}

TEST(RenderDocument, LengthBoundProperty) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    CatalogItem item{"X", "T" + random_text(rng, uniform_index(rng, 400)), random_text(rng, 30),
                     {random_text(rng, 50), random_text(rng, 50)}, {}, {}, {}};
    const std::size_t max_chars = 1 + uniform_index(rng, 300);
    EXPECT_LE(render_document(item, max_chars).size(), max_chars);
  }
}

TEST(RenderDocument, MissingTitle) {
  CatalogItem item{"X1", "", std::string("B"), {}, {}, {}, {}};
  try {
    render_document(item);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingTitle);
  }
}

TEST(RenderQuery, TrainConcatenates) {
  EXPECT_EQ(render_query(Review{"U", "I", 5, "great", "fits well"}, QueryMode::Train),
            "great fits well");
}

TEST(RenderQuery, EvalHardPrefersSummary) {
  EXPECT_EQ(render_query(Review{"U", "I", 5, "Comfy heels", "long body text here"}, QueryMode::EvalHard),
            "Comfy heels");
}

TEST(RenderQuery, EvalHardFallsBackToFirstTwentyBodyTokens) {
  std::string body;
  std::string expected;
  for (int i = 0; i < 50; ++i) {
    body += (i ? " " : "") + std::string("w") + std::to_string(i);
    if (i < 20) expected += (i ? " " : "") + std::string("w") + std::to_string(i);
  }
  EXPECT_EQ(render_query(Review{"U", "I", 5, "", body}, QueryMode::EvalHard), expected);
}

TEST(RenderQuery, EvalHardTokenBound) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Review r{"U", "I", 5, uniform_index(rng, 2) ? random_text(rng, 40) : "", "x " + random_text(rng, 300)};
    const auto n = tokenize(render_query(r, QueryMode::EvalHard)).size();
    EXPECT_LE(n, std::max<std::size_t>(tokenize(r.summary).size(), 20));
  }
}

TEST(RenderQuery, EmptyReview) {
  try {
    render_query(Review{"U", "I", 5, "", ""}, QueryMode::Train);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyReview);
  }
}

TEST(AsciiRatio, Heuristic) {
  EXPECT_DOUBLE_EQ(ascii_letter_ratio("hello"), 1.0);
  EXPECT_DOUBLE_EQ(ascii_letter_ratio("123 !"), 1.0);
  EXPECT_LT(ascii_letter_ratio("\xE3\x81\x93\xE3\x82\x93\xE3\x81\xAB\xE3\x81\xA1\xE3\x81\xAF"), 0.1);
}
