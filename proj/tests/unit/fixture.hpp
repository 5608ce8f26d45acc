#pragma once

// A small, fully loaded System over synthetic data, shared by the retrieval,
// service and acceptance tests.

#include <filesystem>
#include <memory>
#include <string>

#include "recsearch/index.hpp"
#include "recsearch/ingest.hpp"
#include "recsearch/pipeline.hpp"
#include "recsearch/quant.hpp"
#include "recsearch/retrieval.hpp"
#include "recsearch/store.hpp"
#include "recsearch/binary_io.hpp"

namespace testutil {

struct Fixture {
  recsearch::SyntheticData data;
  recsearch::System system;
};

inline std::unique_ptr<Fixture> make_fixture(std::size_t n_items = 400, std::uint64_t seed = 42) {
  using namespace recsearch;
  auto fx = std::make_unique<Fixture>();
  SyntheticConfig sc;
  sc.n_items = n_items;
  sc.n_pairs = 100;
  sc.vocab_size = 40;
  sc.mismatch_rate = 0.5;
  sc.seed = seed;
  fx->data = gen_synthetic(sc);

  EncoderConfig ec;
  ec.hash_buckets = 4096;
  ec.d_in = ec.d_out = 32;
  ec.seed = seed;
  auto model = init_encoder<float>(ec);
  const auto docs = embed_catalog(model, fx->data.catalog);
  System& s = fx->system;
  s.qmodel = quantize_model(model);
  s.model = std::move(model);
  s.flat = FlatIndex{docs};
  HnswParams hp;
  hp.seed = seed;
  s.hnsw = hnsw_build(docs, hp);
  s.bm25 = build_bm25(make_bm25_corpus(fx->data.catalog));
  s.cache = build_cache(fx->data.catalog);
  s.finalize();
  return fx;
}

/// Writes every artifact of `fx` into `dir` plus a config.json referring to
/// them by relative path; returns the config path.
inline std::filesystem::path write_artifacts(const Fixture& fx, const std::filesystem::path& dir) {
  using namespace recsearch;
  const System& s = fx.system;
  write_catalog(dir / "catalog.jsonl", fx.data.catalog);
  write_pairs(dir / "pairs.jsonl", fx.data.pairs);
  save_model(*s.model, dir / "model.enc");
  save_qmodel(*s.qmodel, dir / "model.q8");
  save_embeddings(s.flat->vectors, dir / "embeddings.emb");
  save_index(*s.hnsw, dir / "index.hnsw");
  save_bm25(*s.bm25, dir / "index.bm25");
  save_cache(*s.cache, dir / "metadata.mch");
  const auto cfg = dir / "config.json";
  write_file(cfg, R"({
  "paths": {"catalog": "catalog.jsonl", "pairs": "pairs.jsonl", "model": "model.enc",
            "qmodel": "model.q8", "flat_embeddings": "embeddings.emb", "hnsw_index": "index.hnsw",
            "bm25_index": "index.bm25", "metadata_cache": "metadata.mch"},
  "encoder": {"hash_buckets": 4096, "d_in": 32, "d_out": 32}
})");
  return cfg;
}

}  // namespace testutil
