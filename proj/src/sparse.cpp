#include "recsearch/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "recsearch/binary_io.hpp"
#include "recsearch/error.hpp"

namespace recsearch {
namespace {

constexpr std::string_view kMagic = "BM25";
constexpr std::uint16_t kVersion = 1;

double term_weight(const Bm25Index& index, double idf_t, std::uint32_t tf, std::uint32_t dl) {
  const double k1 = index.params.k1;
  const double b = index.params.b;
  const double norm = k1 * (1.0 - b + b * static_cast<double>(dl) / index.avgdl);
  return idf_t * (static_cast<double>(tf) * (k1 + 1.0)) / (static_cast<double>(tf) + norm);
}

}  // namespace

void Bm25Params::validate() const {
  if (!(k1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorCode::InvalidArgument, "b must lie in [0, 1]");
}

std::size_t Bm25Index::df(std::string_view term) const {
  auto it = postings.find(std::string(term));
  return it == postings.end() ? 0 : it->second.size();
}

std::uint32_t Bm25Index::tf(std::string_view term, std::uint32_t doc) const {
  auto it = postings.find(std::string(term));
  if (it == postings.end()) return 0;
  const auto& list = it->second;
  auto p = std::lower_bound(list.begin(), list.end(), doc,
                            [](const Posting& x, std::uint32_t d) { return x.doc < d; });
  return (p != list.end() && p->doc == doc) ? p->tf : 0;
}

std::uint32_t Bm25Index::ordinal(std::string_view item_id) const {
  auto it = ordinal_of_.find(std::string(item_id));
  if (it == ordinal_of_.end()) throw Error(ErrorCode::UnknownDoc, std::string(item_id));
  return it->second;
}

bool Bm25Index::contains(std::string_view item_id) const {
  return ordinal_of_.contains(std::string(item_id));
}

void Bm25Index::reindex() {
  ordinal_of_.clear();
  ordinal_of_.reserve(doc_ids.size());
  for (std::uint32_t i = 0; i < doc_ids.size(); ++i) ordinal_of_.emplace(doc_ids[i], i);
}

Bm25Index build_bm25(const Bm25Corpus& corpus, const Bm25Params& params) {
  params.validate();
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "BM25 corpus is empty");

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return corpus[a].first < corpus[b].first; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (corpus[order[i]].first == corpus[order[i - 1]].first) {
      throw Error(ErrorCode::DuplicateDoc, corpus[order[i]].first);
    }
  }

  Bm25Index index;
  index.params = params;
  index.doc_ids.reserve(corpus.size());
  index.doc_len.reserve(corpus.size());
  std::uint64_t total_len = 0;
  for (std::uint32_t ord = 0; ord < order.size(); ++ord) {
    const auto& [id, seq] = corpus[order[ord]];
    index.doc_ids.push_back(id);
    index.doc_len.push_back(static_cast<std::uint32_t>(seq.size()));
    total_len += seq.size();

    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& t : seq.tokens) ++counts[t];
    for (const auto& [term, count] : counts) {
      index.postings[std::string(term)].push_back({ord, count});
    }
  }
  index.avgdl = static_cast<double>(total_len) / static_cast<double>(corpus.size());
  index.reindex();
  return index;
}

double idf(const Bm25Index& index, std::string_view term) {
  const auto n = static_cast<double>(index.n_docs());
  const auto df = static_cast<double>(index.df(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_score(const Bm25Index& index, const TokenSeq& query, std::string_view item_id) {
  const std::uint32_t doc = index.ordinal(item_id);
  double score = 0.0;
  for (const auto& term : query.tokens) {
    const std::uint32_t tf = index.tf(term, doc);
    if (tf == 0) continue;
    score += term_weight(index, idf(index, term), tf, index.doc_len[doc]);
  }
  return score;
}

std::vector<ScoredItem> bm25_topk(const Bm25Index& index, const TokenSeq& query, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<double> acc(index.n_docs(), 0.0);
  std::vector<std::uint32_t> touched;
  for (const auto& term : query.tokens) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) continue;
    const double idf_t = idf(index, term);
    for (const Posting& p : it->second) {
      if (acc[p.doc] == 0.0) touched.push_back(p.doc);
      acc[p.doc] += term_weight(index, idf_t, p.tf, index.doc_len[p.doc]);
    }
  }
  std::vector<ScoredItem> hits;
  hits.reserve(touched.size());
  for (std::uint32_t d : touched) hits.push_back({index.doc_ids[d], acc[d]});
  keep_top_k(hits, k);
  return hits;
}

std::string serialize_bm25(const Bm25Index& index) {
  ByteWriter w;
  w.magic(kMagic);
  w.put<std::uint16_t>(kVersion);
  w.put<double>(index.params.k1);
  w.put<double>(index.params.b);
  w.put<std::uint64_t>(index.n_docs());
  for (std::size_t i = 0; i < index.n_docs(); ++i) {
    w.put_string(index.doc_ids[i]);
    w.put<std::uint32_t>(index.doc_len[i]);
  }
  std::vector<const std::string*> terms;
  terms.reserve(index.postings.size());
  for (const auto& [term, list] : index.postings) terms.push_back(&term);
  std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
  w.put<std::uint64_t>(terms.size());
  for (const std::string* term : terms) {
    const auto& list = index.postings.at(*term);
    w.put_string(*term);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
    for (const Posting& p : list) {
      w.put<std::uint32_t>(p.doc);
      w.put<std::uint32_t>(p.tf);
    }
  }
  return w.take();
}

Bm25Index deserialize_bm25(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  r.expect_version(kVersion);
  Bm25Index index;
  index.params.k1 = r.get<double>();
  index.params.b = r.get<double>();
  const auto n = r.get<std::uint64_t>();
  // Each doc record takes at least 8 bytes; reject absurd counts early.
  r.need(n * 8);
  std::uint64_t total_len = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    index.doc_ids.push_back(r.get_string());
    index.doc_len.push_back(r.get<std::uint32_t>());
    total_len += index.doc_len.back();
  }
  index.avgdl = n == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(n);
  const auto n_terms = r.get<std::uint64_t>();
  r.need(n_terms * 8);
  for (std::uint64_t t = 0; t < n_terms; ++t) {
    std::string term = r.get_string();
    const auto count = r.get<std::uint32_t>();
    r.need(static_cast<std::size_t>(count) * 8);
    std::vector<Posting> list(count);
    for (auto& p : list) {
      p.doc = r.get<std::uint32_t>();
      p.tf = r.get<std::uint32_t>();
      if (p.doc >= n) throw Error(ErrorCode::FormatError, "posting references unknown doc");
    }
    index.postings.emplace(std::move(term), std::move(list));
  }
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes after BM25 index");
  index.params.validate();
  index.reindex();
  return index;
}

void save_bm25(const Bm25Index& index, const std::filesystem::path& path) {
  write_file(path, serialize_bm25(index));
}

Bm25Index load_bm25(const std::filesystem::path& path) {
  return deserialize_bm25(read_file(path));
}

}  // namespace recsearch
