#include "recsearch/store.hpp"

#include <algorithm>
#include <vector>

#include "recsearch/binary_io.hpp"
#include "recsearch/error.hpp"

namespace recsearch {
namespace {

constexpr std::string_view kMagic = "MCH1";
constexpr std::uint16_t kVersion = 1;

// Layout: magic | u16 version | u64 count | u32 crc32(payload) | payload.
// Payload records are sorted by item_id so equal caches serialize identically.

void put_optional(ByteWriter& w, const std::optional<std::string>& s) {
  w.put<std::uint8_t>(s ? 1 : 0);
  if (s) w.put_string(*s);
}

std::optional<std::string> get_optional(ByteReader& r) {
  const auto flag = r.get<std::uint8_t>();
  if (flag > 1) throw Error(ErrorCode::FormatError, "bad presence flag");
  if (!flag) return std::nullopt;
  return r.get_string();
}

}  // namespace

void MetadataCache::insert(DisplayRecord record) {
  std::string key = record.item_id;
  auto [it, inserted] = map_.try_emplace(std::move(key), std::move(record));
  if (!inserted) throw Error(ErrorCode::DuplicateKey, it->first);
}

const DisplayRecord* MetadataCache::lookup(std::string_view item_id) const {
  auto it = map_.find(std::string(item_id));
  return it == map_.end() ? nullptr : &it->second;
}

MetadataCache build_cache(const Catalog& catalog) {
  MetadataCache cache;
  cache.reserve(catalog.size());
  for (const auto& item : catalog) {
    cache.insert({item.item_id, item.title, item.brand, item.price, item.image_url});
  }
  return cache;
}

std::string serialize_cache(const MetadataCache& cache) {
  std::vector<const DisplayRecord*> records;
  records.reserve(cache.count());
  for (const auto& [id, rec] : cache.records()) records.push_back(&rec);
  std::sort(records.begin(), records.end(),
            [](const auto* a, const auto* b) { return a->item_id < b->item_id; });

  ByteWriter payload;
  for (const DisplayRecord* rec : records) {
    payload.put_string(rec->item_id);
    payload.put_string(rec->title);
    put_optional(payload, rec->brand);
    payload.put<std::uint8_t>(rec->price ? 1 : 0);
    if (rec->price) payload.put<double>(*rec->price);
    put_optional(payload, rec->image_url);
  }

  ByteWriter w;
  w.magic(kMagic);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint64_t>(records.size());
  w.put<std::uint32_t>(crc32(payload.bytes()));
  w.append(payload.bytes());
  return w.take();
}

MetadataCache deserialize_cache(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kMagic);
  r.expect_version(kVersion);
  const auto count = r.get<std::uint64_t>();
  const auto stored_crc = r.get<std::uint32_t>();
  if (crc32(r.rest()) != stored_crc) {
    throw Error(ErrorCode::ChecksumMismatch, "metadata cache payload is corrupted");
  }
  r.need(count * 10);
  MetadataCache cache;
  cache.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    DisplayRecord rec;
    rec.item_id = r.get_string();
    rec.title = r.get_string();
    rec.brand = get_optional(r);
    const auto has_price = r.get<std::uint8_t>();
    if (has_price > 1) throw Error(ErrorCode::FormatError, "bad presence flag");
    if (has_price) rec.price = r.get<double>();
    rec.image_url = get_optional(r);
    cache.insert(std::move(rec));
  }
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes after MCH1 records");
  return cache;
}

void save_cache(const MetadataCache& cache, const std::filesystem::path& path) {
  write_file(path, serialize_cache(cache));
}

MetadataCache load_cache(const std::filesystem::path& path) {
  return deserialize_cache(read_file(path));
}

}  // namespace recsearch
