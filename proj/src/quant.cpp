#include "recsearch/quant.hpp"

#include "recsearch/binary_io.hpp"

namespace recsearch {
namespace {

constexpr std::string_view kMagic = "QNT1";
constexpr std::uint16_t kVersion = 1;

}  // namespace

bool QuantizedModel::operator==(const QuantizedModel& o) const {
  return hash_seed == o.hash_seed && max_seq_len == o.max_seq_len &&
         q_emb.rows() == o.q_emb.rows() && q_emb.cols() == o.q_emb.cols() &&
         q_proj.rows() == o.q_proj.rows() && q_proj.cols() == o.q_proj.cols() &&
         q_emb == o.q_emb && q_proj == o.q_proj && row_scale == o.row_scale &&
         col_scale == o.col_scale;
}

std::string serialize_qmodel(const QuantizedModel& q) {
  ByteWriter w;
  w.magic(kMagic);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(q.hash_buckets()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(q.d_in()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(q.d_out()));
  w.put<std::uint64_t>(q.hash_seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(q.max_seq_len));
  w.put_array(std::span<const float>(q.row_scale.data(), static_cast<std::size_t>(q.row_scale.size())));
  w.put_array(std::span<const float>(q.col_scale.data(), static_cast<std::size_t>(q.col_scale.size())));
  w.put_array(std::span<const std::int8_t>(q.q_emb.data(), static_cast<std::size_t>(q.q_emb.size())));
  w.put_array(std::span<const std::int8_t>(q.q_proj.data(), static_cast<std::size_t>(q.q_proj.size())));
  return w.take();
}

QuantizedModel deserialize_qmodel(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  r.expect_version(kVersion);
  QuantizedModel q;
  const auto H = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto din = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  const auto dout = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  q.hash_seed = r.get<std::uint64_t>();
  q.max_seq_len = r.get<std::uint32_t>();
  r.need(static_cast<std::size_t>((H + dout) * 4 + H * din + din * dout));
  q.row_scale.resize(H);
  q.col_scale.resize(dout);
  q.q_emb.resize(H, din);
  q.q_proj.resize(din, dout);
  r.get_array(std::span<float>(q.row_scale.data(), static_cast<std::size_t>(H)));
  r.get_array(std::span<float>(q.col_scale.data(), static_cast<std::size_t>(dout)));
  r.get_array(std::span<std::int8_t>(q.q_emb.data(), static_cast<std::size_t>(q.q_emb.size())));
  r.get_array(std::span<std::int8_t>(q.q_proj.data(), static_cast<std::size_t>(q.q_proj.size())));
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes after QNT1 model");
  if ((q.row_scale.array() <= 0.0f).any() || (q.col_scale.array() <= 0.0f).any() ||
      !q.row_scale.allFinite() || !q.col_scale.allFinite()) {
    throw Error(ErrorCode::FormatError, "quantization scales must be finite and positive");
  }
  return q;
}

void save_qmodel(const QuantizedModel& q, const std::filesystem::path& path) {
  write_file(path, serialize_qmodel(q));
}

QuantizedModel load_qmodel(const std::filesystem::path& path) {
  return deserialize_qmodel(read_file(path));
}

SizeReport size_report(const EncoderModel<float>& model, const QuantizedModel& q) {
  SizeReport r;
  r.fp32_bytes = serialize_model(model).size();
  r.int8_bytes = serialize_qmodel(q).size();
  r.ratio = static_cast<double>(r.fp32_bytes) / static_cast<double>(r.int8_bytes);
  return r;
}

}  // namespace recsearch
