#include "recsearch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <memory>

#include "recsearch/index.hpp"
#include "recsearch/textproc.hpp"

namespace recsearch {
namespace {

template <typename EncodeFn>
EmbeddingMatrix embed_with(const Catalog& catalog, Eigen::Index dim, EncodeFn&& fn) {
  EmbeddingMatrix m;
  m.item_ids.reserve(catalog.size());
  m.vectors.resize(static_cast<Eigen::Index>(catalog.size()), dim);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    m.item_ids.push_back(catalog[i].item_id);
    m.vectors.row(static_cast<Eigen::Index>(i)) = fn(render_document(catalog[i])).vector;
  }
  return m;
}

std::vector<std::string> ids_of(const std::vector<ScoredItem>& hits) {
  std::vector<std::string> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.item_id);
  return out;
}

SystemVariant flat_variant(std::string name, const EmbeddingMatrix& docs,
                           std::function<Embedding<float>(const std::string&)> encode_query) {
  auto index = std::make_shared<FlatIndex>(FlatIndex{docs});
  return {std::move(name), [index, encode_query = std::move(encode_query)](
                               const std::string& q, std::size_t k) {
            return ids_of(flat_search(*index, encode_query(q), k));
          }};
}

}  // namespace

std::vector<std::string> render_catalog(const Catalog& catalog) {
  std::vector<std::string> out;
  out.reserve(catalog.size());
  for (const auto& item : catalog) out.push_back(render_document(item));
  return out;
}

EmbeddingMatrix embed_catalog(const EncoderModel<float>& model, const Catalog& catalog) {
  return embed_with(catalog, model.d_out(),
                    [&](const std::string& doc) { return encode(model, doc); });
}

EmbeddingMatrix embed_catalog(const QuantizedModel& model, const Catalog& catalog) {
  return embed_with(catalog, model.d_out(),
                    [&](const std::string& doc) { return encode_q<float>(model, doc); });
}

Bm25Corpus make_bm25_corpus(const Catalog& catalog, bool titles_only) {
  Bm25Corpus corpus;
  corpus.reserve(catalog.size());
  for (const auto& item : catalog) {
    corpus.emplace_back(item.item_id, tokenize(titles_only ? item.title : render_document(item)));
  }
  return corpus;
}

std::vector<TrainingExample> make_training_examples(std::span<const InteractionPair> pairs,
                                                    const Catalog& catalog) {
  const auto by_id = index_catalog(catalog);
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = by_id.find(p.item_id);
    if (it == by_id.end()) throw Error(ErrorCode::UnknownDoc, p.item_id);
    out.push_back({p.query_text, render_document(*it->second)});
  }
  return out;
}

TrainConfig benchmark_train_config() {
  TrainConfig cfg;
  cfg.lr = 2e-2;
  cfg.epochs = 10;
  return cfg;
}

EncoderConfig benchmark_encoder_config() {
  EncoderConfig cfg;
  cfg.d_in = 256;
  cfg.d_out = 256;
  return cfg;
}

const ComparisonRow& BenchmarkResult::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.system == name) return r;
  }
  throw Error(ErrorCode::InvalidArgument, "no benchmark row named " + name);
}

SystemVariant bm25_variant(std::string name, const Bm25Index& index) {
  return {std::move(name), [&index](const std::string& q, std::size_t k) {
            return ids_of(bm25_topk(index, tokenize(q), k));
          }};
}

SystemVariant dense_variant(std::string name, const EncoderModel<float>& model,
                            const EmbeddingMatrix& docs) {
  return flat_variant(std::move(name), docs,
                      [&model](const std::string& q) { return encode(model, q); });
}

SystemVariant int8_variant(std::string name, const QuantizedModel& model,
                           const EmbeddingMatrix& docs) {
  return flat_variant(std::move(name), docs,
                      [&model](const std::string& q) { return encode_q<float>(model, q); });
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const SyntheticData data = gen_synthetic(cfg.data);
  const SplitResult split = split_pairs(data.pairs, cfg.split);

  BenchmarkResult res;
  res.n_train = split.train.size();
  res.n_test = split.test.size();

  const Bm25Index bm25 = build_bm25(make_bm25_corpus(data.catalog, cfg.bm25_titles_only), cfg.bm25);
  const auto raw = init_encoder<float>(cfg.encoder);
  const auto examples = make_training_examples(split.train, data.catalog);
  auto trained = train(raw, examples, cfg.train);
  res.train_report = std::move(trained.report);
  const QuantizedModel q = quantize_model(trained.model);
  res.size = size_report(trained.model, q);

  const EmbeddingMatrix raw_docs = embed_catalog(raw, data.catalog);
  const EmbeddingMatrix trained_docs = embed_catalog(trained.model, data.catalog);
  const EmbeddingMatrix int8_docs = embed_catalog(q, data.catalog);

  std::vector<std::string> queries, truth;
  for (const auto& p : split.test) {
    queries.push_back(p.eval_query());
    truth.push_back(p.item_id);
  }
  const std::vector<SystemVariant> variants{
      bm25_variant("bm25", bm25),
      dense_variant("dense-raw", raw, raw_docs),
      dense_variant("dense-trained", trained.model, trained_docs),
      int8_variant("dense-trained-int8", q, int8_docs),
  };
  res.rows = run_comparison(variants, queries, truth, cfg.k);
  const auto& tr = res.row("dense-trained");
  res.trained_vs_bm25 = paired_bootstrap(tr.hits, res.row("bm25").hits, cfg.bootstrap_samples,
                                         0.05, cfg.bootstrap_seed);
  res.trained_vs_raw = paired_bootstrap(tr.hits, res.row("dense-raw").hits,
                                        cfg.bootstrap_samples, 0.05, cfg.bootstrap_seed);
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace recsearch
