#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "recsearch/binary_io.hpp"
#include "recsearch/error.hpp"
#include "recsearch/index.hpp"
#include "test_util.hpp"

using namespace recsearch;

namespace {

EmbeddingMatrix random_vectors(Rng& rng, std::size_t n, Eigen::Index d) {
  EmbeddingMatrix m;
  m.vectors.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    m.item_ids.push_back("I" + std::to_string(i));
    for (Eigen::Index c = 0; c < d; ++c) {
      m.vectors(static_cast<Eigen::Index>(i), c) = static_cast<float>(2.0 * uniform01(rng) - 1.0);
    }
  }
  m.normalize_all();
  return m;
}

Embedding<float> random_query(Rng& rng, Eigen::Index d) {
  RowVectorf v(d);
  for (Eigen::Index c = 0; c < d; ++c) v(c) = static_cast<float>(2.0 * uniform01(rng) - 1.0);
  return l2_normalize(v);
}

/// Exhaustive scan with a full sort.
std::vector<std::string> scan_top_k(const EmbeddingMatrix& m, const Embedding<float>& q, std::size_t k) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < m.size(); ++i) {
    all.emplace_back(m.vectors.row(static_cast<Eigen::Index>(i)).dot(q.vector), m.item_ids[i]);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

double recall_vs_scan(const HnswIndex& index, Rng& rng, std::size_t n_queries, std::size_t k,
                      std::size_t ef) {
  double found = 0;
  for (std::size_t i = 0; i < n_queries; ++i) {
    const auto q = random_query(rng, index.vectors.dim());
    const auto truth = scan_top_k(index.vectors, q, k);
    const std::set<std::string> want(truth.begin(), truth.end());
    for (const auto& h : hnsw_search(index, q, k, ef)) found += want.count(h.item_id);
  }
  return found / static_cast<double>(n_queries * k);
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

TEST(FlatSearch, MatchesFullScan) {
  Rng rng(1);
  const FlatIndex index{random_vectors(rng, 500, 16)};
  for (int i = 0; i < 50; ++i) {
    const auto q = random_query(rng, 16);
    const std::size_t k = 1 + uniform_index(rng, 30);
    const auto hits = flat_search(index, q, k);
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.item_id);
    EXPECT_EQ(ids, scan_top_k(index.vectors, q, k));
    EXPECT_TRUE(std::is_sorted(hits.begin(), hits.end(), ranks_before));
  }
}

TEST(FlatSearch, TiesBrokenById) {
  EmbeddingMatrix m;
  m.item_ids = {"c", "a", "b"};
  m.vectors = RowMatrixf::Zero(3, 2);
  m.vectors.col(0).setOnes();
  const auto hits = flat_search(FlatIndex{m}, l2_normalize(RowVectorf(RowVectorf::Ones(2))), 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].item_id, "a");
  EXPECT_EQ(hits[1].item_id, "b");
}

TEST(FlatSearch, Errors) {
  Rng rng(2);
  const FlatIndex index{random_vectors(rng, 5, 4)};
  EXPECT_EQ(code_of([&] { flat_search(index, random_query(rng, 3), 1); }), ErrorCode::DimMismatch);
  EXPECT_EQ(code_of([&] { flat_search(index, random_query(rng, 4), 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { flat_search(index, Embedding<float>{RowVectorf::Ones(4), false}, 1); }),
            ErrorCode::NotNormalized);
  EXPECT_EQ(code_of([&] { flat_search(FlatIndex{}, random_query(rng, 4), 1); }), ErrorCode::EmptyIndex);
  EXPECT_EQ(flat_search(index, random_query(rng, 4), 50).size(), 5u);
}

TEST(Hnsw, GraphInvariants) {
  Rng rng(3);
  HnswParams p;
  p.M = 8;
  p.ef_construction = 32;
  const auto index = hnsw_build(random_vectors(rng, 2000, 16), p);
  const auto a = audit(index);
  EXPECT_TRUE(a.degrees_within_caps);
  EXPECT_TRUE(a.edges_valid);
  EXPECT_TRUE(a.entry_has_max_level);
  EXPECT_DOUBLE_EQ(a.reachable_fraction, 1.0);
  EXPECT_LE(a.max_degree_level0, 16u);
  EXPECT_LE(a.max_degree_upper, 8u);
  EXPECT_GT(a.graph_bytes, 0u);
  for (std::size_t n = 0; n < index.size(); ++n) {
    EXPECT_EQ(index.links[n].size(), index.level_of[n] + 1u);
    for (std::size_t l = 0; l < index.links[n].size(); ++l) {
      for (auto v : index.links[n][l]) {
        EXPECT_NE(v, n);
        EXPECT_GE(index.level_of[v], l);
      }
    }
  }
}

TEST(Hnsw, LevelDistribution) {
  Rng rng(4);
  HnswParams p;
  p.M = 4;
  p.ef_construction = 8;
  const auto index = hnsw_build(random_vectors(rng, 4000, 4), p);
  double upper = 0;
  for (auto l : index.level_of) upper += l >= 1;
  // P(level >= 1) = 1/M.
  EXPECT_NEAR(upper / 4000.0, 0.25, 0.03);
}

TEST(Hnsw, RecallAgainstExhaustiveScan) {
  Rng rng(5);
  const auto index = hnsw_build(random_vectors(rng, 3000, 32));
  const double at_default = recall_vs_scan(index, rng, 100, 10, index.params.ef_search);
  const double at_64 = recall_vs_scan(index, rng, 100, 10, 64);
  EXPECT_GE(at_64, 0.95);
  EXPECT_GE(at_default, 0.80);
  EXPECT_GE(at_64, at_default - 0.02);
  RecordProperty("recall_ef16", std::to_string(at_default));
  RecordProperty("recall_ef64", std::to_string(at_64));
}

TEST(Hnsw, ExhaustiveBeamIsExact) {
  Rng rng(6);
  const auto index = hnsw_build(random_vectors(rng, 300, 8));
  for (int i = 0; i < 20; ++i) {
    const auto q = random_query(rng, 8);
    std::vector<std::string> ids;
    for (const auto& h : hnsw_search(index, q, 10, 300)) ids.push_back(h.item_id);
    EXPECT_EQ(ids, scan_top_k(index.vectors, q, 10));
  }
}

TEST(Hnsw, SmallAndEdgeCases) {
  Rng rng(7);
  const auto one = hnsw_build(random_vectors(rng, 1, 4));
  EXPECT_EQ(hnsw_search(one, random_query(rng, 4), 5).size(), 1u);
  const auto few = hnsw_build(random_vectors(rng, 5, 4));
  EXPECT_EQ(hnsw_search(few, random_query(rng, 4), 10, 1).size(), 5u);
  EXPECT_EQ(code_of([&] { hnsw_search(HnswIndex{}, random_query(rng, 4), 1); }), ErrorCode::EmptyIndex);
  EXPECT_EQ(code_of([&] { hnsw_search(few, random_query(rng, 5), 1); }), ErrorCode::DimMismatch);
  EXPECT_EQ(code_of([&] { hnsw_search(few, random_query(rng, 4), 0); }), ErrorCode::InvalidArgument);
  HnswParams bad;
  bad.M = 1;
  EXPECT_EQ(code_of([&] { hnsw_build(random_vectors(rng, 5, 4), bad); }), ErrorCode::InvalidArgument);
  auto unnormalized = random_vectors(rng, 5, 4);
  unnormalized.vectors *= 2.0f;
  EXPECT_EQ(code_of([&] { hnsw_build(unnormalized); }), ErrorCode::NotNormalized);
}

TEST(Hnsw, DeterministicAndSerializable) {
  Rng rng(8);
  const auto vecs = random_vectors(rng, 800, 12);
  const auto a = hnsw_build(vecs);
  const auto b = hnsw_build(vecs);
  const auto bytes = serialize_hnsw(a);
  EXPECT_EQ(serialize_hnsw(b), bytes);

  testutil::TempDir dir;
  save_index(a, dir / "x.hnsw");
  const auto back = load_index(dir / "x.hnsw");
  EXPECT_EQ(serialize_hnsw(back), bytes);
  EXPECT_EQ(read_file(dir / "x.hnsw"), bytes);
  for (int i = 0; i < 10; ++i) {
    const auto q = random_query(rng, 12);
    EXPECT_EQ(hnsw_search(back, q, 10), hnsw_search(a, q, 10));
  }
  EXPECT_EQ(code_of([&] { deserialize_hnsw(bytes.substr(0, bytes.size() / 2)); }), ErrorCode::Truncated);
}
