#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "recsearch/binary_io.hpp"
#include "recsearch/error.hpp"
#include "recsearch/random.hpp"
#include "recsearch/sparse.hpp"
#include "test_util.hpp"

using namespace recsearch;

namespace {

TokenSeq seq(std::vector<std::string> t) { return TokenSeq{std::move(t), std::nullopt}; }

std::vector<oracle::Doc> random_corpus(Rng& rng, std::size_t n_docs) {
  std::vector<oracle::Doc> docs;
  for (std::size_t i = 0; i < n_docs; ++i) {
    std::vector<std::string> toks;
    const std::size_t len = 1 + uniform_index(rng, 15);
    for (std::size_t t = 0; t < len; ++t) toks.push_back(testutil::random_word(rng));
    docs.emplace_back("D" + std::to_string(uniform_index(rng, 1000000)) + "_" + std::to_string(i),
                      std::move(toks));
  }
  return docs;
}

Bm25Corpus to_corpus(const std::vector<oracle::Doc>& docs) {
  Bm25Corpus c;
  for (const auto& [id, toks] : docs) c.emplace_back(id, seq(toks));
  return c;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Bm25, IdfValues) {
  Bm25Corpus corpus;
  for (int i = 0; i < 32; ++i) {
    std::vector<std::string> t{"filler"};
    if (i == 0) t.push_back("rare");
    if (i < 16) t.push_back("half");
    corpus.emplace_back("d" + std::to_string(i), seq(t));
  }
  const auto index = build_bm25(corpus);
  EXPECT_NEAR(idf(index, "rare"), std::log(22.0), 1e-12);
  EXPECT_NEAR(idf(index, "half"), std::log(2.0), 1e-12);
  EXPECT_GT(idf(index, "filler"), 0.0);
  EXPECT_EQ(index.df("half"), 16u);
  EXPECT_EQ(index.df("absent"), 0u);
}

TEST(Bm25, MatchesBruteForceOnRandomCorpora) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto docs = random_corpus(rng, 50);
    Bm25Params params{0.5 + uniform01(rng), uniform01(rng)};
    const auto index = build_bm25(to_corpus(docs), params);
    std::vector<std::string> query;
    for (std::size_t t = 0, n = 1 + uniform_index(rng, 4); t < n; ++t) query.push_back(testutil::random_word(rng));
    const auto expected = oracle::bm25_scores(docs, query, params.k1, params.b);
    for (const auto& [id, s] : expected) EXPECT_NEAR(bm25_score(index, seq(query), id), s, 1e-9);

    const std::size_t k = 1 + uniform_index(rng, 20);
    const auto want = oracle::top_k(expected, k, /*drop_zero=*/true);
    const auto got = bm25_topk(index, seq(query), k);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got[i].score, want[i].second, 1e-9);
      if (std::abs(got[i].score - want[i].second) < 1e-12) EXPECT_EQ(got[i].item_id, want[i].first);
    }
  }
}

TEST(Bm25, NoSharedTermGivesEmptyList) {
  const auto index = build_bm25({{"a", seq({"red", "shoe"})}, {"b", seq({"blue"})}});
  EXPECT_TRUE(bm25_topk(index, seq({"green"}), 5).empty());
  EXPECT_TRUE(bm25_topk(index, seq({}), 5).empty());
  EXPECT_EQ(bm25_score(index, seq({"green"}), "a"), 0.0);
}

TEST(Bm25, InsertionOrderDoesNotMatter) {
  Rng rng(4);
  auto docs = random_corpus(rng, 40);
  const auto a = build_bm25(to_corpus(docs));
  shuffle(std::span(docs), rng);
  const auto b = build_bm25(to_corpus(docs));
  EXPECT_EQ(serialize_bm25(a), serialize_bm25(b));
}

TEST(Bm25, MonotoneInTermFrequency) {
  // Same length, more occurrences of the query term -> higher score.
  const auto index = build_bm25({{"a", seq({"shoe", "x", "y", "z"})},
                                 {"b", seq({"shoe", "shoe", "y", "z"})},
                                 {"c", seq({"q", "r", "s", "t"})}});
  EXPECT_GT(bm25_score(index, seq({"shoe"}), "b"), bm25_score(index, seq({"shoe"}), "a"));
}

TEST(Bm25, Errors) {
  EXPECT_EQ(code_of([] { build_bm25({}); }), ErrorCode::EmptyCorpus);
  EXPECT_EQ(code_of([] { build_bm25({{"a", seq({"x"})}, {"a", seq({"y"})}}); }), ErrorCode::DuplicateDoc);
  const auto index = build_bm25({{"a", seq({"x"})}});
  EXPECT_EQ(code_of([&] { bm25_score(index, seq({"x"}), "zz"); }), ErrorCode::UnknownDoc);
  EXPECT_EQ(code_of([&] { bm25_topk(index, seq({"x"}), 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { build_bm25({{"a", seq({"x"})}}, {0.0, 0.75}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { build_bm25({{"a", seq({"x"})}}, {1.2, 1.5}); }), ErrorCode::InvalidArgument);
}

TEST(Bm25, SerializationRoundTrip) {
  Rng rng(9);
  const auto index = build_bm25(to_corpus(random_corpus(rng, 60)), {1.5, 0.6});
  const auto bytes = serialize_bm25(index);
  const auto back = deserialize_bm25(bytes);
  EXPECT_EQ(serialize_bm25(back), bytes);
  EXPECT_EQ(back.doc_ids, index.doc_ids);
  EXPECT_EQ(back.params, index.params);
  EXPECT_DOUBLE_EQ(back.avgdl, index.avgdl);
  for (const auto& id : index.doc_ids) {
    EXPECT_EQ(bm25_score(back, seq({"red", "shoe"}), id), bm25_score(index, seq({"red", "shoe"}), id));
  }

  testutil::TempDir dir;
  save_bm25(index, dir / "x.bm25");
  EXPECT_EQ(read_file(dir / "x.bm25"), bytes);
  EXPECT_EQ(serialize_bm25(load_bm25(dir / "x.bm25")), bytes);
}

TEST(Bm25, CorruptBytesAreRejected) {
  const auto bytes = serialize_bm25(build_bm25({{"a", seq({"x", "y"})}, {"b", seq({"y"})}}));
  std::string bad = bytes;
  bad[0] = 'Z';
  EXPECT_EQ(code_of([&] { deserialize_bm25(bad); }), ErrorCode::BadMagic);
  EXPECT_EQ(code_of([&] { deserialize_bm25(bytes.substr(0, bytes.size() - 3)); }), ErrorCode::Truncated);
  EXPECT_EQ(code_of([&] { deserialize_bm25(bytes + "x"); }), ErrorCode::FormatError);
}
