#pragma once

// Glue between the modules: catalog encoding, training-example assembly, and
// the end-to-end vocabulary-mismatch experiment (BM25 vs untrained vs trained
// bi-encoder, FP32 and INT8).

#include <span>
#include <string>
#include <vector>

#include "recsearch/encoder.hpp"
#include "recsearch/evalbench.hpp"
#include "recsearch/ingest.hpp"
#include "recsearch/quant.hpp"
#include "recsearch/sparse.hpp"
#include "recsearch/trainer.hpp"

namespace recsearch {

/// Rendered document per catalog item, in catalog order.
std::vector<std::string> render_catalog(const Catalog& catalog);

EmbeddingMatrix embed_catalog(const EncoderModel<float>& model, const Catalog& catalog);
EmbeddingMatrix embed_catalog(const QuantizedModel& model, const Catalog& catalog);

/// BM25 documents: the rendered document, or the bare title.
Bm25Corpus make_bm25_corpus(const Catalog& catalog, bool titles_only = false);

/// (training query, rendered target document) per pair; throws UnknownDoc for
/// a pair whose item is not in the catalog.
std::vector<TrainingExample> make_training_examples(std::span<const InteractionPair> pairs,
                                                    const Catalog& catalog);

/// Training defaults for the bag-of-hashed-tokens encoder. The stock
/// transformer recipe (lr 2e-4, one epoch) barely moves a randomly initialized
/// embedding table, so the benchmark uses a larger step and more epochs.
TrainConfig benchmark_train_config();

/// Benchmark-scale encoder: 256-dimensional towers.
EncoderConfig benchmark_encoder_config();

struct BenchmarkConfig {
  SyntheticConfig data;
  SplitSpec split;
  EncoderConfig encoder = benchmark_encoder_config();
  TrainConfig train = benchmark_train_config();
  Bm25Params bm25;
  bool bm25_titles_only = false;
  std::size_t k = 10;
  std::size_t bootstrap_samples = 5000;
  std::uint64_t bootstrap_seed = 42;
};

struct BenchmarkResult {
  std::vector<ComparisonRow> rows;  // bm25, dense-raw, dense-trained, dense-trained-int8
  BootstrapResult trained_vs_bm25;
  BootstrapResult trained_vs_raw;
  TrainReport train_report;
  SizeReport size;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double wall_time_s = 0.0;

  const ComparisonRow& row(const std::string& name) const;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

/// Variants searched exhaustively over `docs` for the given test queries.
SystemVariant bm25_variant(std::string name, const Bm25Index& index);
SystemVariant dense_variant(std::string name, const EncoderModel<float>& model,
                            const EmbeddingMatrix& docs);
SystemVariant int8_variant(std::string name, const QuantizedModel& model,
                           const EmbeddingMatrix& docs);

}  // namespace recsearch
