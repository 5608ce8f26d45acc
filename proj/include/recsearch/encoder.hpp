#pragma once

// Siamese bi-encoder: hashed token embeddings, masked mean pooling, a shared
// linear projection, and L2 normalization. Queries and documents go through
// the same encode() with the same parameters.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recsearch/error.hpp"
#include "recsearch/linalg.hpp"
#include "recsearch/random.hpp"
#include "recsearch/textproc.hpp"

namespace recsearch {

inline constexpr double kZeroNormEps = 1e-12;
inline constexpr double kUnitNormTol = 1e-5;

struct EncoderConfig {
  std::size_t hash_buckets = std::size_t{1} << 15;
  std::size_t d_in = 64;
  std::size_t d_out = 64;
  std::uint64_t seed = 42;
  std::size_t max_seq_len = kMaxSeqLen;
};

template <typename Scalar>
struct EncoderModel {
  RowMatrix<Scalar> emb_table;  // hash_buckets x d_in
  RowMatrix<Scalar> proj;       // d_in x d_out
  std::uint64_t hash_seed = 0;
  std::size_t max_seq_len = kMaxSeqLen;

  Eigen::Index hash_buckets() const noexcept { return emb_table.rows(); }
  Eigen::Index d_in() const noexcept { return proj.rows(); }
  Eigen::Index d_out() const noexcept { return proj.cols(); }

  template <typename Other>
  EncoderModel<Other> cast() const {
    return {emb_table.template cast<Other>(), proj.template cast<Other>(), hash_seed, max_seq_len};
  }

  bool operator==(const EncoderModel& o) const {
    return hash_seed == o.hash_seed && max_seq_len == o.max_seq_len &&
           emb_table.rows() == o.emb_table.rows() && emb_table.cols() == o.emb_table.cols() &&
           proj.rows() == o.proj.rows() && proj.cols() == o.proj.cols() &&
           emb_table == o.emb_table && proj == o.proj;
  }
};

template <typename Scalar>
struct Embedding {
  RowVector<Scalar> vector;
  bool normalized = false;
};

/// Seeded 64-bit FNV-1a with a splitmix finalizer.
inline std::uint32_t token_bucket(std::string_view token, std::uint64_t seed,
                                  std::size_t buckets) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix_seed(seed, 0x7e57);
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::uint32_t>(mix_seed(h, 0) % buckets);
}

inline std::vector<std::uint32_t> token_buckets(const TokenSeq& seq, std::uint64_t seed,
                                                std::size_t buckets) {
  std::vector<std::uint32_t> out;
  out.reserve(seq.size());
  for (const auto& t : seq.tokens) out.push_back(token_bucket(t, seed, buckets));
  return out;
}

/// Buckets for `text` after tokenization and truncation; throws EmptySequence.
template <typename Scalar>
std::vector<std::uint32_t> text_buckets(const EncoderModel<Scalar>& model, std::string_view text) {
  auto seq = truncate_tokens(tokenize(text), model.max_seq_len);
  if (seq.empty()) throw Error(ErrorCode::EmptySequence, "text has no tokens");
  return token_buckets(seq, model.hash_seed, static_cast<std::size_t>(model.hash_buckets()));
}

/// emb_table ~ U(+-1/sqrt(d_in)), proj = I + U(+-0.01), both seeded.
template <typename Scalar>
EncoderModel<Scalar> init_encoder(const EncoderConfig& cfg) {
  EncoderModel<Scalar> m;
  m.hash_seed = cfg.seed;
  m.max_seq_len = cfg.max_seq_len;
  const auto H = static_cast<Eigen::Index>(cfg.hash_buckets);
  const auto din = static_cast<Eigen::Index>(cfg.d_in);
  const auto dout = static_cast<Eigen::Index>(cfg.d_out);
  m.emb_table.resize(H, din);
  m.proj.resize(din, dout);
  Rng rng(mix_seed(cfg.seed, 10));
  const double bound = din > 0 ? 1.0 / std::sqrt(static_cast<double>(din)) : 0.0;
  for (Eigen::Index i = 0; i < m.emb_table.size(); ++i) {
    m.emb_table.data()[i] = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * bound);
  }
  for (Eigen::Index r = 0; r < din; ++r) {
    for (Eigen::Index c = 0; c < dout; ++c) {
      const double noise = 0.01 * (2.0 * uniform01(rng) - 1.0);
      m.proj(r, c) = static_cast<Scalar>((r == c ? 1.0 : 0.0) + noise);
    }
  }
  return m;
}

template <typename Scalar>
struct TokenStates {
  RowMatrix<Scalar> hidden;                   // T x d_in
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mask;  // T, entries in {0, 1}
};

/// Row t is emb_table[bucket(token_t)].
template <typename Scalar>
TokenStates<Scalar> embed_tokens(const EncoderModel<Scalar>& model, const TokenSeq& seq) {
  if (seq.empty()) throw Error(ErrorCode::EmptySequence, "token sequence is empty");
  const auto buckets =
      token_buckets(seq, model.hash_seed, static_cast<std::size_t>(model.hash_buckets()));
  TokenStates<Scalar> out;
  out.hidden.resize(static_cast<Eigen::Index>(buckets.size()), model.d_in());
  for (std::size_t t = 0; t < buckets.size(); ++t) {
    out.hidden.row(static_cast<Eigen::Index>(t)) = model.emb_table.row(buckets[t]);
  }
  out.mask.setOnes(static_cast<Eigen::Index>(buckets.size()));
  return out;
}

/// z = sum_t a_t h_t / sum_t a_t.
template <typename DerivedH, typename DerivedMask>
RowVector<typename DerivedH::Scalar> mean_pool(const Eigen::MatrixBase<DerivedH>& hidden,
                                               const Eigen::MatrixBase<DerivedMask>& mask) {
  using Scalar = typename DerivedH::Scalar;
  if (mask.size() != hidden.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "mask length differs from sequence length");
  }
  const Scalar weight = mask.sum();
  if (weight == Scalar(0)) throw Error(ErrorCode::AllMasked, "attention mask is all zero");
  return (mask.transpose() * hidden) / weight;
}

template <typename Derived>
Embedding<typename Derived::Scalar> l2_normalize(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  RowVector<Scalar> v = z;
  const Scalar norm = v.norm();
  if (!(static_cast<double>(norm) > kZeroNormEps)) {
    throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  }
  v /= norm;
  return {std::move(v), true};
}

/// Mean of the embedding rows selected by `buckets`, row lookups via `row(b)`.
template <typename Scalar, typename RowFn>
RowVector<Scalar> pool_buckets(std::span<const std::uint32_t> buckets, Eigen::Index d_in,
                               RowFn&& row) {
  RowVector<Scalar> z = RowVector<Scalar>::Zero(d_in);
  for (std::uint32_t b : buckets) z += row(b);
  return z / static_cast<Scalar>(buckets.size());
}

template <typename Scalar>
Embedding<Scalar> encode_buckets(const EncoderModel<Scalar>& model,
                                 std::span<const std::uint32_t> buckets) {
  const RowVector<Scalar> z = pool_buckets<Scalar>(
      buckets, model.d_in(), [&](std::uint32_t b) { return model.emb_table.row(b); });
  return l2_normalize(z * model.proj);
}

template <typename Scalar>
Embedding<Scalar> encode(const EncoderModel<Scalar>& model, std::string_view text) {
  const auto buckets = text_buckets(model, text);
  return encode_buckets(model, std::span<const std::uint32_t>(buckets));
}

template <typename Scalar>
Scalar similarity(const Embedding<Scalar>& a, const Embedding<Scalar>& b) {
  if (!a.normalized || !b.normalized) {
    throw Error(ErrorCode::NotNormalized, "similarity needs unit-norm embeddings");
  }
  if (a.vector.size() != b.vector.size()) throw Error(ErrorCode::DimMismatch, "similarity");
  return a.vector.dot(b.vector);
}

// ---------------------------------------------------------------------------
// Embedding matrices (EMB1) and model files (ENC1). Stored as 32-bit floats.

struct EmbeddingMatrix {
  std::vector<std::string> item_ids;
  RowMatrixf vectors;  // N x dim

  Eigen::Index dim() const noexcept { return vectors.cols(); }
  std::size_t size() const noexcept { return item_ids.size(); }

  /// Rescales every row to unit norm; throws ZeroVector on an all-zero row.
  void normalize_all();
  bool operator==(const EmbeddingMatrix&) const;
};

std::string serialize_embeddings(const EmbeddingMatrix& m, bool normalized = true);
/// Rows are renormalized unless the header marks them already normalized.
EmbeddingMatrix deserialize_embeddings(std::string_view bytes,
                                       std::optional<Eigen::Index> expect_dim = std::nullopt);
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path,
                     bool normalized = true);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<Eigen::Index> expect_dim = std::nullopt);

std::string serialize_model(const EncoderModel<float>& model);
EncoderModel<float> deserialize_model(std::string_view bytes);
void save_model(const EncoderModel<float>& model, const std::filesystem::path& path);
EncoderModel<float> load_model(const std::filesystem::path& path);

}  // namespace recsearch
