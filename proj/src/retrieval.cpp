#include "recsearch/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

namespace recsearch {
namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

constexpr std::string_view kFilterFields[] = {"item_id", "title", "brand", "image_url", "price"};

bool field_matches(const RankedResult& r, const Filter& f) {
  if (f.field == "item_id") return lower(r.item_id) == lower(f.value);
  if (!r.display) return false;
  const DisplayRecord& d = *r.display;
  if (f.field == "title") return lower(d.title) == lower(f.value);
  if (f.field == "brand") return d.brand && lower(*d.brand) == lower(f.value);
  if (f.field == "image_url") return d.image_url && lower(*d.image_url) == lower(f.value);
  if (f.field == "price") {
    if (!d.price) return false;
    char* end = nullptr;
    const double v = std::strtod(f.value.c_str(), &end);
    return end != f.value.c_str() && *end == '\0' && std::abs(v - *d.price) <= 1e-9;
  }
  throw Error(ErrorCode::UnknownField, f.field);
}

const EncoderModel<float>& require_model(const System& s) {
  if (!s.model) throw Error(ErrorCode::ArtifactsMissing, "fp32 encoder not loaded");
  return *s.model;
}

std::vector<ScoredItem> dense_search(const System& s, const Embedding<float>& q, std::size_t k,
                                     const RetrievalRequest& req) {
  if (req.engine == Engine::Hnsw) {
    if (!s.hnsw) throw Error(ErrorCode::ArtifactsMissing, "HNSW index not loaded");
    return hnsw_search(*s.hnsw, q, std::min(k, s.hnsw->size()), req.ef_search);
  }
  if (!s.flat) throw Error(ErrorCode::ArtifactsMissing, "flat index not loaded");
  return flat_search(*s.flat, q, k);
}

std::vector<ScoredItem> fuse_candidates(const System& s, const Embedding<float>& q,
                                        const TokenSeq& tokens, const RetrievalRequest& req) {
  const std::size_t depth = kHybridCandidateFactor * req.k;
  const auto dense_hits = dense_search(s, q, depth, req);
  const auto sparse_hits = bm25_topk(*s.bm25, tokens, depth);

  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto* hits : {&dense_hits, &sparse_hits}) {
    for (const auto& h : *hits) {
      if (seen.insert(h.item_id).second) ids.push_back(h.item_id);
    }
  }

  // Both sides are scored exactly for every candidate in the union.
  const EmbeddingMatrix* vecs = s.dense_vectors();
  std::vector<std::optional<double>> dense(ids.size()), sparse(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (auto row = s.dense_row(ids[i])) {
      dense[i] = static_cast<double>(q.vector.dot(vecs->vectors.row(*row)));
    }
    if (s.bm25->contains(ids[i])) sparse[i] = bm25_score(*s.bm25, tokens, ids[i]);
  }
  const auto fused = fuse_scores(dense, sparse, req.lambda);
  std::vector<ScoredItem> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], fused[i]});
  keep_top_k(out, req.k);
  return out;
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Dense: return "dense";
    case Mode::Sparse: return "sparse";
    case Mode::Hybrid: return "hybrid";
  }
  return "dense";
}

std::string_view to_string(Engine e) noexcept { return e == Engine::Hnsw ? "hnsw" : "flat"; }

std::string_view to_string(Precision p) noexcept { return p == Precision::Int8 ? "int8" : "fp32"; }

Mode parse_mode(std::string_view s) {
  if (s == "dense") return Mode::Dense;
  if (s == "sparse") return Mode::Sparse;
  if (s == "hybrid") return Mode::Hybrid;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

Engine parse_engine(std::string_view s) {
  if (s == "flat") return Engine::Flat;
  if (s == "hnsw") return Engine::Hnsw;
  throw Error(ErrorCode::InvalidArgument, "unknown engine '" + std::string(s) + "'");
}

Precision parse_precision(std::string_view s) {
  if (s == "fp32") return Precision::Fp32;
  if (s == "int8") return Precision::Int8;
  throw Error(ErrorCode::InvalidArgument, "unknown precision '" + std::string(s) + "'");
}

void RetrievalRequest::validate() const {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  }
  if (ef_search && *ef_search < 1) throw Error(ErrorCode::InvalidArgument, "ef_search must be >= 1");
}

void System::finalize() {
  row_of_.clear();
  if (const EmbeddingMatrix* v = dense_vectors()) {
    row_of_.reserve(v->size());
    for (std::uint32_t i = 0; i < v->size(); ++i) row_of_.emplace(v->item_ids[i], i);
  }
}

const EmbeddingMatrix* System::dense_vectors() const noexcept {
  if (flat) return &flat->vectors;
  if (hnsw) return &hnsw->vectors;
  return nullptr;
}

std::optional<std::uint32_t> System::dense_row(std::string_view item_id) const {
  auto it = row_of_.find(std::string(item_id));
  if (it == row_of_.end()) return std::nullopt;
  return it->second;
}

Embedding<float> System::encode_query(std::string_view text, Precision precision) const {
  if (precision == Precision::Int8) {
    if (!qmodel) throw Error(ErrorCode::ArtifactsMissing, "int8 encoder not loaded");
    return encode_q<float>(*qmodel, text);
  }
  return encode(require_model(*this), text);
}

std::vector<RankedResult> retrieve(const System& system, const RetrievalRequest& req,
                                   StageTimings* timings) {
  req.validate();
  validate_filters(req.filters);
  const auto t0 = Clock::now();

  std::optional<Embedding<float>> q;
  TokenSeq tokens;
  if (req.mode != Mode::Sparse) q = system.encode_query(req.query_text, req.precision);
  if (req.mode != Mode::Dense) {
    if (!system.bm25) throw Error(ErrorCode::ArtifactsMissing, "BM25 index not loaded");
    tokens = tokenize(req.query_text);
  }
  const auto t1 = Clock::now();

  std::vector<ScoredItem> hits;
  std::vector<SourceScores> sources;
  switch (req.mode) {
    case Mode::Dense:
      hits = dense_search(system, *q, req.k, req);
      for (const auto& h : hits) sources.push_back({h.score, std::nullopt});
      break;
    case Mode::Sparse:
      hits = bm25_topk(*system.bm25, tokens, req.k);
      for (const auto& h : hits) sources.push_back({std::nullopt, h.score});
      break;
    case Mode::Hybrid:
      hits = fuse_candidates(system, *q, tokens, req);
      for (const auto& h : hits) {
        SourceScores src;
        if (auto row = system.dense_row(h.item_id)) {
          src.dense = static_cast<double>(q->vector.dot(system.dense_vectors()->vectors.row(*row)));
        }
        if (system.bm25->contains(h.item_id)) src.sparse = bm25_score(*system.bm25, tokens, h.item_id);
        sources.push_back(src);
      }
      break;
  }
  const auto t2 = Clock::now();

  std::vector<RankedResult> results;
  results.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    RankedResult r;
    r.item_id = std::move(hits[i].item_id);
    r.score = hits[i].score;
    r.rank = i + 1;
    r.source_scores = sources[i];
    if (system.cache) {
      if (const DisplayRecord* rec = system.cache->lookup(r.item_id)) r.display = *rec;
    }
    results.push_back(std::move(r));
  }
  results = apply_filters(std::move(results), req.filters);
  const auto t3 = Clock::now();

  if (timings) {
    timings->encode_ms = ms_between(t0, t1);
    timings->search_ms = ms_between(t1, t2);
    timings->lookup_ms = ms_between(t2, t3);
    timings->total_ms = ms_between(t0, t3);
  }
  return results;
}

std::vector<double> fuse_scores(std::span<const std::optional<double>> dense,
                                std::span<const std::optional<double>> sparse, double lambda) {
  if (dense.size() != sparse.size()) {
    throw Error(ErrorCode::LengthMismatch, "dense and sparse score lists differ in length");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  }
  auto normalize = [](std::span<const std::optional<double>> side) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& v : side) {
      if (!v) continue;
      lo = any ? std::min(lo, *v) : *v;
      hi = any ? std::max(hi, *v) : *v;
      any = true;
    }
    std::vector<double> out(side.size(), 0.5);
    if (!any || hi == lo) return out;
    for (std::size_t i = 0; i < side.size(); ++i) {
      out[i] = ((side[i] ? *side[i] : lo) - lo) / (hi - lo);
    }
    return out;
  };
  const auto d = normalize(dense);
  const auto s = normalize(sparse);
  std::vector<double> fused(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) fused[i] = lambda * d[i] + (1.0 - lambda) * s[i];
  return fused;
}

void validate_filters(std::span<const Filter> filters) {
  for (const auto& f : filters) {
    if (std::find(std::begin(kFilterFields), std::end(kFilterFields), f.field) ==
        std::end(kFilterFields)) {
      throw Error(ErrorCode::UnknownField, f.field);
    }
  }
}

std::vector<RankedResult> apply_filters(std::vector<RankedResult> results,
                                        std::span<const Filter> filters) {
  validate_filters(filters);
  if (filters.empty()) return results;
  std::erase_if(results, [&](const RankedResult& r) {
    return !std::all_of(filters.begin(), filters.end(),
                        [&](const Filter& f) { return field_matches(r, f); });
  });
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = i + 1;
  return results;
}

}  // namespace recsearch
