#pragma once

// Post-training dynamic INT8 quantization: weights are stored as symmetric
// int8 with one scale per embedding row and per projection output column;
// activations stay in floating point.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "recsearch/encoder.hpp"

namespace recsearch {

using Int8Matrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct QuantizedModel {
  Int8Matrix q_emb;           // hash_buckets x d_in
  Eigen::VectorXf row_scale;  // hash_buckets
  Int8Matrix q_proj;          // d_in x d_out
  Eigen::VectorXf col_scale;  // d_out
  std::uint64_t hash_seed = 0;
  std::size_t max_seq_len = kMaxSeqLen;

  Eigen::Index hash_buckets() const noexcept { return q_emb.rows(); }
  Eigen::Index d_in() const noexcept { return q_proj.rows(); }
  Eigen::Index d_out() const noexcept { return q_proj.cols(); }

  bool operator==(const QuantizedModel& o) const;
};

namespace detail {

// scale = max|w| / 127 (1 for an all-zero slice); q = round(w / scale).
// Arithmetic runs in double so re-quantizing a dequantized model is exact.
template <typename Derived>
float quantize_slice(const Eigen::MatrixBase<Derived>& w, std::int8_t* out, Eigen::Index stride) {
  const double max_abs = w.size() == 0 ? 0.0 : static_cast<double>(w.cwiseAbs().maxCoeff());
  const float scale = max_abs == 0.0 ? 1.0f : static_cast<float>(max_abs / 127.0);
  const double s = scale;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double q = std::nearbyint(static_cast<double>(w(i)) / s);
    out[i * stride] = static_cast<std::int8_t>(std::clamp(q, -127.0, 127.0));
  }
  return scale;
}

}  // namespace detail

template <typename Scalar>
QuantizedModel quantize_model(const EncoderModel<Scalar>& model) {
  if (!model.emb_table.allFinite() || !model.proj.allFinite()) {
    throw Error(ErrorCode::NonFiniteWeights, "cannot quantize non-finite weights");
  }
  QuantizedModel q;
  q.hash_seed = model.hash_seed;
  q.max_seq_len = model.max_seq_len;
  q.q_emb.resize(model.emb_table.rows(), model.emb_table.cols());
  q.row_scale.resize(model.emb_table.rows());
  for (Eigen::Index r = 0; r < model.emb_table.rows(); ++r) {
    q.row_scale(r) = detail::quantize_slice(model.emb_table.row(r), q.q_emb.row(r).data(), 1);
  }
  q.q_proj.resize(model.proj.rows(), model.proj.cols());
  q.col_scale.resize(model.proj.cols());
  for (Eigen::Index c = 0; c < model.proj.cols(); ++c) {
    q.col_scale(c) = detail::quantize_slice(model.proj.col(c), q.q_proj.data() + c, q.q_proj.cols());
  }
  return q;
}

/// Element-wise q * scale, evaluated in Scalar.
template <typename Scalar = double>
EncoderModel<Scalar> dequantize(const QuantizedModel& q) {
  EncoderModel<Scalar> m;
  m.hash_seed = q.hash_seed;
  m.max_seq_len = q.max_seq_len;
  m.emb_table = q.q_emb.cast<Scalar>();
  for (Eigen::Index r = 0; r < m.emb_table.rows(); ++r) {
    m.emb_table.row(r) *= static_cast<Scalar>(q.row_scale(r));
  }
  m.proj = q.q_proj.cast<Scalar>() *
           q.col_scale.cast<Scalar>().asDiagonal();
  return m;
}

/// Quantized inference: embedding rows and projection are dequantized on use,
/// pooling/normalization run in Scalar exactly as in encode().
template <typename Scalar = float>
Embedding<Scalar> encode_q(const QuantizedModel& q, std::string_view text) {
  auto seq = truncate_tokens(tokenize(text), q.max_seq_len);
  if (seq.empty()) throw Error(ErrorCode::EmptySequence, "text has no tokens");
  const auto buckets = token_buckets(seq, q.hash_seed, static_cast<std::size_t>(q.hash_buckets()));
  const RowVector<Scalar> z = pool_buckets<Scalar>(
      std::span<const std::uint32_t>(buckets), q.d_in(), [&](std::uint32_t b) {
        return RowVector<Scalar>(q.q_emb.row(b).template cast<Scalar>() *
                                 static_cast<Scalar>(q.row_scale(b)));
      });
  const RowMatrix<Scalar> proj = q.q_proj.cast<Scalar>() * q.col_scale.cast<Scalar>().asDiagonal();
  return l2_normalize(z * proj);
}

std::string serialize_qmodel(const QuantizedModel& q);
QuantizedModel deserialize_qmodel(std::string_view bytes);
void save_qmodel(const QuantizedModel& q, const std::filesystem::path& path);
QuantizedModel load_qmodel(const std::filesystem::path& path);

struct SizeReport {
  std::size_t fp32_bytes = 0;
  std::size_t int8_bytes = 0;
  double ratio = 0.0;
};

/// Serialized ENC1 vs QNT1 byte counts.
SizeReport size_report(const EncoderModel<float>& model, const QuantizedModel& q);

}  // namespace recsearch
