#pragma once

// JSON system configuration and fail-fast artifact loading for serving.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "recsearch/encoder.hpp"
#include "recsearch/index.hpp"
#include "recsearch/pipeline.hpp"
#include "recsearch/retrieval.hpp"
#include "recsearch/sparse.hpp"
#include "recsearch/trainer.hpp"

namespace recsearch {

struct ArtifactPaths {
  std::filesystem::path pairs;
  std::filesystem::path catalog;
  std::filesystem::path model;
  std::filesystem::path qmodel;
  std::filesystem::path hnsw_index;
  std::filesystem::path flat_embeddings;
  std::filesystem::path metadata_cache;
  std::filesystem::path bm25_index;
};

struct ServingConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t default_k = 10;
  Mode default_mode = Mode::Dense;
  double default_lambda = 0.5;
};

struct SystemConfig {
  ArtifactPaths paths;
  ServingConfig serving;
  EncoderConfig encoder = benchmark_encoder_config();
  HnswParams hnsw;
  Bm25Params bm25;
  TrainConfig train = benchmark_train_config();
  std::uint64_t seed = 42;
};

/// Parses a config document. Unknown keys are rejected; relative paths are
/// resolved against `base_dir`.
SystemConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
SystemConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const SystemConfig& cfg);

/// RECSEARCH_HOST and RECSEARCH_PORT override the serving address.
void apply_env_overrides(SystemConfig& cfg);

struct LoadedSystem {
  System system;
  std::map<std::string, std::string> checksums;  // artifact name -> CRC-32 hex
};

/// Loads every configured artifact. The encoder, a dense index and the
/// metadata cache are required; a configured path that does not exist throws
/// ArtifactsMissing.
LoadedSystem load_system(const SystemConfig& cfg);

}  // namespace recsearch
