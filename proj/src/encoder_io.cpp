#include <cmath>

#include "recsearch/binary_io.hpp"
#include "recsearch/encoder.hpp"

namespace recsearch {
namespace {

constexpr std::string_view kEmbMagic = "EMB1";
constexpr std::string_view kModelMagic = "ENC1";
constexpr std::uint16_t kVersion = 1;

}  // namespace

void EmbeddingMatrix::normalize_all() {
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    const float n = vectors.row(i).norm();
    if (!(static_cast<double>(n) > kZeroNormEps)) {
      throw Error(ErrorCode::ZeroVector, "row " + std::to_string(i) + " has zero norm");
    }
    vectors.row(i) /= n;
  }
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& o) const {
  return item_ids == o.item_ids && vectors.rows() == o.vectors.rows() &&
         vectors.cols() == o.vectors.cols() && vectors == o.vectors;
}

std::string serialize_embeddings(const EmbeddingMatrix& m, bool normalized) {
  if (static_cast<Eigen::Index>(m.item_ids.size()) != m.vectors.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "item_ids and vectors disagree on N");
  }
  ByteWriter w;
  w.magic(kEmbMagic);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint8_t>(normalized ? 1 : 0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.dim()));
  w.put<std::uint64_t>(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    w.put_string(m.item_ids[i]);
    const auto row = m.vectors.row(static_cast<Eigen::Index>(i));
    w.put_array(std::span<const float>(row.data(), static_cast<std::size_t>(m.dim())));
  }
  return w.take();
}

namespace {

EmbeddingMatrix read_embeddings(ByteReader& r, std::optional<Eigen::Index> expect_dim) {
  r.expect_magic(kEmbMagic);
  r.expect_version(kVersion);
  const bool normalized = r.get<std::uint8_t>() != 0;
  const auto dim = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  const auto count = r.get<std::uint64_t>();
  if (expect_dim && *expect_dim != dim) {
    throw Error(ErrorCode::DimMismatch, "embedding dim " + std::to_string(dim) + ", expected " +
                                            std::to_string(*expect_dim));
  }
  r.need(count * (4 + static_cast<std::uint64_t>(dim) * 4));
  EmbeddingMatrix m;
  m.item_ids.reserve(count);
  m.vectors.resize(static_cast<Eigen::Index>(count), dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    m.item_ids.push_back(r.get_string());
    auto row = m.vectors.row(static_cast<Eigen::Index>(i));
    r.get_array(std::span<float>(row.data(), static_cast<std::size_t>(dim)));
  }
  if (!m.vectors.allFinite()) throw Error(ErrorCode::NonFinite, "embedding file has NaN/Inf");
  if (!normalized) m.normalize_all();
  return m;
}

}  // namespace

EmbeddingMatrix deserialize_embeddings(std::string_view bytes,
                                       std::optional<Eigen::Index> expect_dim) {
  ByteReader r(bytes);
  auto m = read_embeddings(r, expect_dim);
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes after EMB1 block");
  return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path,
                     bool normalized) {
  write_file(path, serialize_embeddings(m, normalized));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<Eigen::Index> expect_dim) {
  return deserialize_embeddings(read_file(path), expect_dim);
}

std::string serialize_model(const EncoderModel<float>& model) {
  ByteWriter w;
  w.magic(kModelMagic);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(model.hash_buckets()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.d_in()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.d_out()));
  w.put<std::uint64_t>(model.hash_seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.max_seq_len));
  w.put_array(std::span<const float>(model.emb_table.data(),
                                     static_cast<std::size_t>(model.emb_table.size())));
  w.put_array(std::span<const float>(model.proj.data(),
                                     static_cast<std::size_t>(model.proj.size())));
  return w.take();
}

EncoderModel<float> deserialize_model(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kModelMagic);
  r.expect_version(kVersion);
  EncoderModel<float> m;
  const auto H = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto din = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  const auto dout = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  m.hash_seed = r.get<std::uint64_t>();
  m.max_seq_len = r.get<std::uint32_t>();
  r.need(static_cast<std::size_t>(H * din + din * dout) * sizeof(float));
  m.emb_table.resize(H, din);
  m.proj.resize(din, dout);
  r.get_array(std::span<float>(m.emb_table.data(), static_cast<std::size_t>(m.emb_table.size())));
  r.get_array(std::span<float>(m.proj.data(), static_cast<std::size_t>(m.proj.size())));
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes after ENC1 model");
  if (!m.emb_table.allFinite() || !m.proj.allFinite()) {
    throw Error(ErrorCode::NonFiniteWeights, "model file has NaN/Inf weights");
  }
  return m;
}

void save_model(const EncoderModel<float>& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

EncoderModel<float> load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace recsearch
