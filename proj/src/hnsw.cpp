#include <algorithm>
#include <cmath>
#include <queue>

#include "recsearch/binary_io.hpp"
#include "recsearch/index.hpp"

namespace recsearch {
namespace {

constexpr std::string_view kMagic = "HNS1";
constexpr std::uint16_t kVersion = 1;

struct Candidate {
  float dist;
  std::uint32_t id;
};

// Strict order on (dist, id) so that every heap and sort is deterministic.
struct Closer {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
  }
};
struct Farther {
  bool operator()(const Candidate& a, const Candidate& b) const { return Closer{}(b, a); }
};

class VisitedSet {
 public:
  void reset(std::size_t n) {
    if (marks_.size() < n) {
      marks_.assign(n, 0);
      epoch_ = 0;
    }
    if (++epoch_ == 0) {
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }
  bool insert(std::uint32_t id) {
    if (marks_[id] == epoch_) return false;
    marks_[id] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> marks_;
  std::uint32_t epoch_ = 0;
};

class Graph {
 public:
  explicit Graph(const HnswIndex& index) : index_(index) {}

  float distance(const float* q, std::uint32_t id) const {
    const auto row = index_.vectors.vectors.row(id);
    return 1.0f - Eigen::Map<const RowVectorf>(q, row.size()).dot(row);
  }

  Candidate greedy(const float* q, Candidate ep, int level) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::uint32_t n : index_.links[ep.id][static_cast<std::size_t>(level)]) {
        const Candidate c{distance(q, n), n};
        if (Closer{}(c, ep)) {
          ep = c;
          changed = true;
        }
      }
    }
    return ep;
  }

  /// Beam search on one level; returns up to ef candidates, closest first.
  std::vector<Candidate> search_layer(const float* q, const std::vector<Candidate>& entries,
                                      std::size_t ef, int level, VisitedSet& visited) const {
    visited.reset(index_.size());
    std::priority_queue<Candidate, std::vector<Candidate>, Farther> frontier;  // closest on top
    std::priority_queue<Candidate, std::vector<Candidate>, Closer> best;       // farthest on top
    for (const auto& e : entries) {
      if (!visited.insert(e.id)) continue;
      frontier.push(e);
      best.push(e);
      if (best.size() > ef) best.pop();
    }
    while (!frontier.empty()) {
      const Candidate c = frontier.top();
      if (best.size() >= ef && Closer{}(best.top(), c)) break;
      frontier.pop();
      for (std::uint32_t n : index_.links[c.id][static_cast<std::size_t>(level)]) {
        if (!visited.insert(n)) continue;
        const Candidate cand{distance(q, n), n};
        if (best.size() < ef || Closer{}(cand, best.top())) {
          frontier.push(cand);
          best.push(cand);
          if (best.size() > ef) best.pop();
        }
      }
    }
    std::vector<Candidate> out(best.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = best.top();
      best.pop();
    }
    return out;
  }

 private:
  const HnswIndex& index_;
};

void check_vectors(const EmbeddingMatrix& v) {
  if (static_cast<Eigen::Index>(v.item_ids.size()) != v.vectors.rows()) {
    throw Error(ErrorCode::DimMismatch, "item_ids and vector rows disagree");
  }
  if (v.size() > 0 && v.dim() == 0) throw Error(ErrorCode::DimMismatch, "zero-dimensional vectors");
  for (Eigen::Index i = 0; i < v.vectors.rows(); ++i) {
    if (std::abs(static_cast<double>(v.vectors.row(i).norm()) - 1.0) > 1e-3) {
      throw Error(ErrorCode::NotNormalized, "row " + std::to_string(i) + " is not unit norm");
    }
  }
}

}  // namespace

void HnswParams::validate() const {
  if (M < 2) throw Error(ErrorCode::InvalidArgument, "M must be >= 2");
  if (ef_construction < M) throw Error(ErrorCode::InvalidArgument, "ef_construction must be >= M");
  if (ef_search < 1) throw Error(ErrorCode::InvalidArgument, "ef_search must be >= 1");
}

HnswIndex hnsw_build(EmbeddingMatrix vectors, const HnswParams& params) {
  params.validate();
  check_vectors(vectors);

  HnswIndex index;
  index.params = params;
  index.vectors = std::move(vectors);
  const std::size_t n = index.vectors.size();
  index.links.resize(n);
  index.level_of.resize(n);

  Rng rng(params.seed);
  const double mL = 1.0 / std::log(static_cast<double>(params.M));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    const auto level = static_cast<std::size_t>(std::floor(-std::log(u) * mL));
    index.level_of[i] = static_cast<std::uint32_t>(std::min(level, params.max_level_cap));
  }

  Graph graph(index);
  VisitedSet visited;
  std::vector<Candidate> shrink;
  for (std::uint32_t i = 0; i < n; ++i) {
    const int level = static_cast<int>(index.level_of[i]);
    index.links[i].resize(static_cast<std::size_t>(level) + 1);
    if (index.max_level < 0) {
      index.entry_point = i;
      index.max_level = level;
      continue;
    }
    const float* q = index.vectors.vectors.row(i).data();
    Candidate ep{graph.distance(q, index.entry_point), index.entry_point};
    for (int lc = index.max_level; lc > level; --lc) ep = graph.greedy(q, ep, lc);

    std::vector<Candidate> entries{ep};
    for (int lc = std::min(level, index.max_level); lc >= 0; --lc) {
      auto found = graph.search_layer(q, entries, params.ef_construction, lc, visited);
      const std::size_t keep = std::min(params.M, found.size());
      auto& mine = index.links[i][static_cast<std::size_t>(lc)];
      for (std::size_t j = 0; j < keep; ++j) mine.push_back(found[j].id);

      const std::size_t cap = index.max_degree(lc);
      for (std::size_t j = 0; j < keep; ++j) {
        const std::uint32_t nb = found[j].id;
        auto& theirs = index.links[nb][static_cast<std::size_t>(lc)];
        theirs.push_back(i);
        if (theirs.size() <= cap) continue;
        const float* nq = index.vectors.vectors.row(nb).data();
        shrink.clear();
        for (std::uint32_t x : theirs) shrink.push_back({graph.distance(nq, x), x});
        std::sort(shrink.begin(), shrink.end(), Closer{});
        theirs.clear();
        for (std::size_t s = 0; s < cap; ++s) theirs.push_back(shrink[s].id);
      }
      entries = std::move(found);
    }
    if (level > index.max_level) {
      index.max_level = level;
      index.entry_point = i;
    }
  }
  return index;
}

std::vector<ScoredItem> hnsw_search(const HnswIndex& index, const Embedding<float>& q,
                                    std::size_t k, std::optional<std::size_t> ef_search) {
  if (index.empty()) throw Error(ErrorCode::EmptyIndex, "HNSW index is empty");
  if (!q.normalized) throw Error(ErrorCode::NotNormalized, "query must be unit norm");
  if (q.vector.size() != index.vectors.dim()) throw Error(ErrorCode::DimMismatch, "query dim");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const std::size_t ef = std::max(ef_search.value_or(index.params.ef_search), k);

  thread_local VisitedSet visited;
  Graph graph(index);
  const float* qp = q.vector.data();
  Candidate ep{graph.distance(qp, index.entry_point), index.entry_point};
  for (int lc = index.max_level; lc > 0; --lc) ep = graph.greedy(qp, ep, lc);
  const auto found = graph.search_layer(qp, {ep}, ef, 0, visited);

  std::vector<ScoredItem> out;
  out.reserve(found.size());
  for (const auto& c : found) {
    const float dot = q.vector.dot(index.vectors.vectors.row(c.id));
    out.push_back({index.vectors.item_ids[c.id], static_cast<double>(dot)});
  }
  keep_top_k(out, k);
  return out;
}

HnswAudit audit(const HnswIndex& index) {
  HnswAudit a;
  const std::size_t n = index.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (index.links[i].size() != index.level_of[i] + 1) a.edges_valid = false;
    for (std::size_t lc = 0; lc < index.links[i].size(); ++lc) {
      const auto& adj = index.links[i][lc];
      a.graph_bytes += adj.size() * sizeof(std::uint32_t);
      if (lc == 0) {
        a.max_degree_level0 = std::max(a.max_degree_level0, adj.size());
      } else {
        a.max_degree_upper = std::max(a.max_degree_upper, adj.size());
      }
      if (adj.size() > index.max_degree(static_cast<int>(lc))) a.degrees_within_caps = false;
      for (std::uint32_t nb : adj) {
        if (nb >= n || nb == i || index.level_of[nb] < lc) a.edges_valid = false;
      }
    }
    if (static_cast<int>(index.level_of[i]) > index.max_level) a.entry_has_max_level = false;
  }
  if (n == 0) return a;
  a.entry_has_max_level =
      a.entry_has_max_level && static_cast<int>(index.level_of[index.entry_point]) == index.max_level;

  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> stack{index.entry_point};
  seen[index.entry_point] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const std::uint32_t v = stack.back();
    stack.pop_back();
    ++reached;
    for (std::uint32_t nb : index.links[v][0]) {
      if (nb < n && !seen[nb]) {
        seen[nb] = 1;
        stack.push_back(nb);
      }
    }
  }
  a.reachable_fraction = static_cast<double>(reached) / static_cast<double>(n);
  a.graph_bytes += n * sizeof(std::uint32_t);
  return a;
}

std::string serialize_hnsw(const HnswIndex& index) {
  ByteWriter w;
  w.magic(kMagic);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.params.M));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.params.ef_construction));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.params.ef_search));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.params.max_level_cap));
  w.put<std::uint64_t>(index.params.seed);
  w.put<std::uint64_t>(index.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.vectors.dim()));
  w.put<std::int32_t>(index.max_level);
  w.put<std::uint32_t>(index.entry_point);
  for (std::uint32_t level : index.level_of) w.put_varint(level);
  for (const auto& per_level : index.links) {
    for (const auto& adj : per_level) {
      w.put_varint(adj.size());
      for (std::uint32_t nb : adj) w.put_varint(nb);
    }
  }
  w.append(serialize_embeddings(index.vectors, true));
  return w.take();
}

HnswIndex deserialize_hnsw(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  r.expect_version(kVersion);
  HnswIndex index;
  index.params.M = r.get<std::uint32_t>();
  index.params.ef_construction = r.get<std::uint32_t>();
  index.params.ef_search = r.get<std::uint32_t>();
  index.params.max_level_cap = r.get<std::uint32_t>();
  index.params.seed = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  const auto dim = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  index.max_level = r.get<std::int32_t>();
  index.entry_point = r.get<std::uint32_t>();
  r.need(n);  // at least one byte per level entry
  index.level_of.resize(n);
  for (auto& level : index.level_of) {
    const auto v = r.get_varint();
    if (v > index.params.max_level_cap) throw Error(ErrorCode::FormatError, "level exceeds cap");
    level = static_cast<std::uint32_t>(v);
  }
  index.links.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    index.links[i].resize(index.level_of[i] + 1);
    for (auto& adj : index.links[i]) {
      const auto count = r.get_varint();
      r.need(count);
      adj.resize(count);
      for (auto& nb : adj) {
        const auto v = r.get_varint();
        if (v >= n) throw Error(ErrorCode::FormatError, "edge to unknown node");
        nb = static_cast<std::uint32_t>(v);
      }
    }
  }
  index.vectors = deserialize_embeddings(r.rest(), dim);
  if (index.vectors.size() != n) throw Error(ErrorCode::FormatError, "vector count mismatch");
  if (n > 0 && (index.entry_point >= n || index.max_level < 0)) {
    throw Error(ErrorCode::FormatError, "invalid entry point");
  }
  index.params.validate();
  return index;
}

void save_index(const HnswIndex& index, const std::filesystem::path& path) {
  write_file(path, serialize_hnsw(index));
}

HnswIndex load_index(const std::filesystem::path& path) {
  return deserialize_hnsw(read_file(path));
}

}  // namespace recsearch
