#include "recsearch/config.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "recsearch/binary_io.hpp"

namespace recsearch {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::string_view where, std::set<std::string> allowed) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::InvalidArgument, "config: '" + std::string(where) + "' must be an object");
  }
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::InvalidArgument,
                  "config: unknown key '" + key + "' in '" + std::string(where) + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: bad value for '") + key + "'");
  }
}

void read_path(const json& obj, const char* key, std::filesystem::path& out,
               const std::filesystem::path& base) {
  std::string s;
  read(obj, key, s);
  if (s.empty()) return;
  std::filesystem::path p(s);
  out = p.is_relative() && !base.empty() ? base / p : p;
}

std::string load_bytes(const std::filesystem::path& p, const char* what, LoadedSystem& out) {
  if (!std::filesystem::exists(p)) {
    throw Error(ErrorCode::ArtifactsMissing, std::string(what) + " not found at " + p.string());
  }
  std::string bytes = read_file(p);
  out.checksums[what] = crc32_hex(bytes);
  return bytes;
}

}  // namespace

SystemConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  reject_unknown(doc, "root", {"paths", "serving", "encoder", "hnsw", "bm25", "train", "seed"});

  SystemConfig cfg;
  read(doc, "seed", cfg.seed);
  cfg.encoder.seed = cfg.seed;
  cfg.hnsw.seed = cfg.seed;
  cfg.train.seed = cfg.seed;

  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    reject_unknown(p, "paths",
                   {"pairs", "catalog", "model", "qmodel", "hnsw_index", "flat_embeddings",
                    "metadata_cache", "bm25_index"});
    read_path(p, "pairs", cfg.paths.pairs, base_dir);
    read_path(p, "catalog", cfg.paths.catalog, base_dir);
    read_path(p, "model", cfg.paths.model, base_dir);
    read_path(p, "qmodel", cfg.paths.qmodel, base_dir);
    read_path(p, "hnsw_index", cfg.paths.hnsw_index, base_dir);
    read_path(p, "flat_embeddings", cfg.paths.flat_embeddings, base_dir);
    read_path(p, "metadata_cache", cfg.paths.metadata_cache, base_dir);
    read_path(p, "bm25_index", cfg.paths.bm25_index, base_dir);
  }
  if (doc.contains("serving")) {
    const auto& s = doc["serving"];
    reject_unknown(s, "serving", {"host", "port", "default_k", "default_mode", "default_lambda"});
    read(s, "host", cfg.serving.host);
    read(s, "port", cfg.serving.port);
    read(s, "default_k", cfg.serving.default_k);
    read(s, "default_lambda", cfg.serving.default_lambda);
    std::string mode;
    read(s, "default_mode", mode);
    if (!mode.empty()) cfg.serving.default_mode = parse_mode(mode);
  }
  if (doc.contains("encoder")) {
    const auto& e = doc["encoder"];
    reject_unknown(e, "encoder", {"hash_buckets", "d_in", "d_out", "max_seq_len"});
    read(e, "hash_buckets", cfg.encoder.hash_buckets);
    read(e, "d_in", cfg.encoder.d_in);
    read(e, "d_out", cfg.encoder.d_out);
    read(e, "max_seq_len", cfg.encoder.max_seq_len);
  }
  if (doc.contains("hnsw")) {
    const auto& h = doc["hnsw"];
    reject_unknown(h, "hnsw", {"M", "ef_construction", "ef_search", "max_level_cap"});
    read(h, "M", cfg.hnsw.M);
    read(h, "ef_construction", cfg.hnsw.ef_construction);
    read(h, "ef_search", cfg.hnsw.ef_search);
    read(h, "max_level_cap", cfg.hnsw.max_level_cap);
    cfg.hnsw.validate();
  }
  if (doc.contains("bm25")) {
    const auto& b = doc["bm25"];
    reject_unknown(b, "bm25", {"k1", "b"});
    read(b, "k1", cfg.bm25.k1);
    read(b, "b", cfg.bm25.b);
    cfg.bm25.validate();
  }
  if (doc.contains("train")) {
    const auto& t = doc["train"];
    reject_unknown(t, "train",
                   {"batch_size", "grad_accum", "epochs", "temperature", "lr", "warmup_fraction",
                    "weight_decay"});
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "grad_accum", cfg.train.grad_accum);
    read(t, "epochs", cfg.train.epochs);
    read(t, "temperature", cfg.train.temperature);
    read(t, "lr", cfg.train.lr);
    read(t, "warmup_fraction", cfg.train.warmup_fraction);
    read(t, "weight_decay", cfg.train.weight_decay);
    cfg.train.validate();
  }
  if (cfg.serving.port < 0 || cfg.serving.port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "config: port out of range");
  }
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "config not found: " + path.string());
  }
  return parse_config(read_file(path), path.parent_path());
}

std::string config_to_json(const SystemConfig& cfg) {
  const auto& p = cfg.paths;
  json doc{
      {"paths",
       {{"pairs", p.pairs.string()},
        {"catalog", p.catalog.string()},
        {"model", p.model.string()},
        {"qmodel", p.qmodel.string()},
        {"hnsw_index", p.hnsw_index.string()},
        {"flat_embeddings", p.flat_embeddings.string()},
        {"metadata_cache", p.metadata_cache.string()},
        {"bm25_index", p.bm25_index.string()}}},
      {"serving",
       {{"host", cfg.serving.host},
        {"port", cfg.serving.port},
        {"default_k", cfg.serving.default_k},
        {"default_mode", std::string(to_string(cfg.serving.default_mode))},
        {"default_lambda", cfg.serving.default_lambda}}},
      {"encoder",
       {{"hash_buckets", cfg.encoder.hash_buckets},
        {"d_in", cfg.encoder.d_in},
        {"d_out", cfg.encoder.d_out},
        {"max_seq_len", cfg.encoder.max_seq_len}}},
      {"hnsw",
       {{"M", cfg.hnsw.M},
        {"ef_construction", cfg.hnsw.ef_construction},
        {"ef_search", cfg.hnsw.ef_search},
        {"max_level_cap", cfg.hnsw.max_level_cap}}},
      {"bm25", {{"k1", cfg.bm25.k1}, {"b", cfg.bm25.b}}},
      {"train",
       {{"batch_size", cfg.train.batch_size},
        {"grad_accum", cfg.train.grad_accum},
        {"epochs", cfg.train.epochs},
        {"temperature", cfg.train.temperature},
        {"lr", cfg.train.lr},
        {"warmup_fraction", cfg.train.warmup_fraction},
        {"weight_decay", cfg.train.weight_decay}}},
      {"seed", cfg.seed}};
  return doc.dump(2);
}

void apply_env_overrides(SystemConfig& cfg) {
  if (const char* host = std::getenv("RECSEARCH_HOST"); host && *host) cfg.serving.host = host;
  if (const char* port = std::getenv("RECSEARCH_PORT"); port && *port) {
    char* end = nullptr;
    const long v = std::strtol(port, &end, 10);
    if (*end != '\0' || v < 0 || v > 65535) {
      throw Error(ErrorCode::InvalidArgument, "RECSEARCH_PORT is not a valid port");
    }
    cfg.serving.port = static_cast<int>(v);
  }
}

LoadedSystem load_system(const SystemConfig& cfg) {
  const auto& p = cfg.paths;
  if (p.model.empty()) throw Error(ErrorCode::ArtifactsMissing, "no encoder model configured");
  if (p.flat_embeddings.empty() && p.hnsw_index.empty()) {
    throw Error(ErrorCode::ArtifactsMissing, "no dense index configured");
  }
  if (p.metadata_cache.empty()) throw Error(ErrorCode::ArtifactsMissing, "no metadata cache configured");

  LoadedSystem out;
  System& s = out.system;
  s.model = deserialize_model(load_bytes(p.model, "model", out));
  const Eigen::Index dim = s.model->d_out();
  if (!p.qmodel.empty()) s.qmodel = deserialize_qmodel(load_bytes(p.qmodel, "qmodel", out));
  if (!p.flat_embeddings.empty()) {
    s.flat = FlatIndex{deserialize_embeddings(load_bytes(p.flat_embeddings, "flat_embeddings", out), dim)};
  }
  if (!p.hnsw_index.empty()) {
    s.hnsw = deserialize_hnsw(load_bytes(p.hnsw_index, "hnsw_index", out));
    if (s.hnsw->vectors.dim() != dim) throw Error(ErrorCode::DimMismatch, "HNSW index dimension");
  }
  if (!p.bm25_index.empty()) s.bm25 = deserialize_bm25(load_bytes(p.bm25_index, "bm25_index", out));
  s.cache = deserialize_cache(load_bytes(p.metadata_cache, "metadata_cache", out));
  s.finalize();
  return out;
}

}  // namespace recsearch
