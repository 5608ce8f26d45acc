#include "recsearch/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "recsearch/binary_io.hpp"
#include "recsearch/error.hpp"
#include "recsearch/random.hpp"
#include "recsearch/textproc.hpp"

namespace recsearch {

using nlohmann::json;

namespace {

template <typename T, typename Fn>
ParseResult<T> parse_jsonl(const std::filesystem::path& path, Fn&& convert) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  ParseResult<T> result;
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++lines;
    try {
      auto obj = json::parse(line);
      if (!obj.is_object()) throw Error(ErrorCode::FormatError, "not an object");
      if (auto rec = convert(obj)) {
        result.records.push_back(std::move(*rec));
      } else {
        ++result.skipped;
      }
    } catch (const json::exception&) {
      ++result.skipped;
    } catch (const Error&) {
      ++result.skipped;
    }
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  if (lines > 0 && 2 * result.skipped > lines) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + std::to_string(result.skipped) +
                                            " of " + std::to_string(lines) + " lines malformed");
  }
  return result;
}

std::string text_field(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_array()) {
    std::string joined;
    for (const auto& part : *it) {
      if (!part.is_string()) continue;
      if (!joined.empty()) joined.push_back(' ');
      joined += part.get<std::string>();
    }
    return joined;
  }
  throw Error(ErrorCode::FormatError, "field '" + key + "' is not text");
}

std::optional<double> number_field(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() && std::isfinite(v)) return v;
  }
  return std::nullopt;
}

std::optional<std::string> optional_text(const json& obj, const std::string& key) {
  auto s = text_field(obj, key);
  if (s.empty()) return std::nullopt;
  return s;
}

json catalog_item_json(const CatalogItem& item) {
  json j = {{"item_id", item.item_id}, {"title", item.title}, {"features", item.features}};
  if (item.brand) j["brand"] = *item.brand;
  if (item.description) j["description"] = *item.description;
  if (item.price) j["price"] = *item.price;
  if (item.image_url) j["image_url"] = *item.image_url;
  return j;
}

json pair_json(const InteractionPair& p) {
  json j = {{"query_text", p.query_text},
            {"item_id", p.item_id},
            {"user_id", p.user_id},
            {"rating", p.rating}};
  if (!p.eval_query_text.empty()) j["eval_query_text"] = p.eval_query_text;
  return j;
}

template <typename T>
std::vector<T> read_canonical(const std::filesystem::path& path,
                              std::optional<T> (*convert)(const json&)) {
  auto parsed = parse_jsonl<T>(path, convert);
  if (parsed.skipped > 0) {
    throw Error(ErrorCode::FormatError,
                path.string() + ": " + std::to_string(parsed.skipped) + " malformed lines");
  }
  return std::move(parsed.records);
}

std::optional<CatalogItem> catalog_item_from_json(const json& j) {
  CatalogItem item;
  item.item_id = j.at("item_id").get<std::string>();
  item.title = j.value("title", "");
  if (j.contains("brand") && j["brand"].is_string()) item.brand = j["brand"].get<std::string>();
  if (j.contains("features")) item.features = j["features"].get<std::vector<std::string>>();
  if (j.contains("description") && j["description"].is_string()) {
    item.description = j["description"].get<std::string>();
  }
  if (j.contains("price") && j["price"].is_number()) item.price = j["price"].get<double>();
  if (j.contains("image_url") && j["image_url"].is_string()) {
    item.image_url = j["image_url"].get<std::string>();
  }
  return item;
}

std::optional<InteractionPair> pair_from_json(const json& j) {
  InteractionPair p;
  p.query_text = j.at("query_text").get<std::string>();
  p.item_id = j.at("item_id").get<std::string>();
  p.user_id = j.value("user_id", "");
  p.rating = j.value("rating", 0.0);
  p.eval_query_text = j.value("eval_query_text", "");
  return p;
}

}  // namespace

ParseResult<Review> parse_reviews(const std::filesystem::path& path, const FieldMap& fields) {
  return parse_jsonl<Review>(path, [&](const json& obj) -> std::optional<Review> {
    Review r;
    r.item_id = text_field(obj, fields.review_item);
    r.user_id = text_field(obj, fields.user);
    const auto rating = number_field(obj, fields.rating);
    if (r.item_id.empty() || !rating || *rating < 1.0 || *rating > 5.0) return std::nullopt;
    r.rating = *rating;
    r.summary = text_field(obj, fields.summary);
    r.body = text_field(obj, fields.body);
    return r;
  });
}

ParseResult<CatalogItem> parse_metadata(const std::filesystem::path& path,
                                        const FieldMap& fields) {
  return parse_jsonl<CatalogItem>(path, [&](const json& obj) -> std::optional<CatalogItem> {
    CatalogItem item;
    for (const auto& key : fields.meta_item) {
      item.item_id = text_field(obj, key);
      if (!item.item_id.empty()) break;
    }
    if (item.item_id.empty()) return std::nullopt;
    item.title = text_field(obj, fields.meta_title);
    item.brand = optional_text(obj, fields.meta_brand);
    if (auto it = obj.find(fields.meta_features); it != obj.end() && it->is_array()) {
      for (const auto& f : *it) {
        if (f.is_string()) item.features.push_back(f.get<std::string>());
      }
    }
    item.description = optional_text(obj, fields.meta_description);
    item.price = number_field(obj, fields.meta_price);
    item.image_url = optional_text(obj, fields.meta_image);
    return item;
  });
}

std::unordered_map<std::string, const CatalogItem*> index_catalog(const Catalog& catalog) {
  std::unordered_map<std::string, const CatalogItem*> by_id;
  by_id.reserve(catalog.size());
  for (const auto& item : catalog) by_id.emplace(item.item_id, &item);
  return by_id;
}

std::vector<Review> filter_reviews(const std::vector<Review>& reviews, const Catalog& catalog,
                                   const FilterConfig& cfg) {
  // 1. Positive feedback only.
  std::vector<const Review*> stage;
  for (const auto& r : reviews) {
    if (r.rating >= cfg.min_rating) stage.push_back(&r);
  }

  // 2. Language and length.
  std::erase_if(stage, [&](const Review* r) {
    if (tokenize(r->body).size() < cfg.min_body_tokens) return true;
    if (cfg.english_only &&
        ascii_letter_ratio(r->summary + " " + r->body) < cfg.min_ascii_ratio) {
      return true;
    }
    return false;
  });

  // 3. Deduplicate (user, item): highest rating wins, then earliest seen.
  std::map<std::pair<std::string, std::string>, std::size_t> best;
  std::vector<const Review*> deduped;
  for (const Review* r : stage) {
    auto key = std::make_pair(r->user_id, r->item_id);
    auto [it, inserted] = best.emplace(key, deduped.size());
    if (inserted) {
      deduped.push_back(r);
    } else if (r->rating > deduped[it->second]->rating) {
      deduped[it->second] = r;
    }
  }

  auto drop_sparse_users = [&](std::vector<const Review*>& rs) {
    std::unordered_map<std::string, std::size_t> per_user;
    for (const Review* r : rs) ++per_user[r->user_id];
    std::erase_if(rs, [&](const Review* r) { return per_user[r->user_id] < cfg.min_user_pairs; });
  };
  drop_sparse_users(deduped);

  // 4. Inner join with usable catalog entries.
  const auto by_id = index_catalog(catalog);
  std::erase_if(deduped, [&](const Review* r) {
    auto it = by_id.find(r->item_id);
    if (it == by_id.end()) return true;
    const CatalogItem& item = *it->second;
    return item.title.empty() || !item.description || item.description->empty();
  });
  // The join can push a user back under the threshold.
  drop_sparse_users(deduped);

  std::vector<Review> out;
  out.reserve(deduped.size());
  for (const Review* r : deduped) out.push_back(*r);
  return out;
}

std::vector<InteractionPair> filter_interactions(const std::vector<Review>& reviews,
                                                 const Catalog& catalog,
                                                 const FilterConfig& cfg) {
  std::vector<InteractionPair> pairs;
  for (const auto& r : filter_reviews(reviews, catalog, cfg)) {
    InteractionPair p;
    p.query_text = render_query(r, QueryMode::Train);
    p.eval_query_text = render_query(r, QueryMode::EvalHard);
    p.item_id = r.item_id;
    p.user_id = r.user_id;
    p.rating = r.rating;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

SplitResult split_pairs(const std::vector<InteractionPair>& pairs, const SplitSpec& spec) {
  if (pairs.size() < 2) throw Error(ErrorCode::TooFewPairs, "need at least 2 pairs to split");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }

  // Identical (query_text, item_id) pairs form one unit so they land on the
  // same side; each unit belongs to the user of its first occurrence.
  struct Unit {
    std::vector<std::size_t> members;
  };
  std::map<std::pair<std::string, std::string>, std::size_t> unit_of;
  std::vector<Unit> units;
  std::map<std::string, std::vector<std::size_t>> user_units;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto key = std::make_pair(pairs[i].query_text, pairs[i].item_id);
    auto [it, inserted] = unit_of.emplace(key, units.size());
    if (inserted) {
      units.emplace_back();
      user_units[pairs[i].user_id].push_back(it->second);
    }
    units[it->second].members.push_back(i);
  }

  // Largest-remainder allocation of the global train count across users.
  const auto n = static_cast<double>(pairs.size());
  const auto total_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
  struct Quota {
    std::string user;
    std::size_t size = 0;
    std::size_t train = 0;
    double remainder = 0.0;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [user, ids] : user_units) {
    Quota q;
    q.user = user;
    for (std::size_t u : ids) q.size += units[u].members.size();
    const double ideal = spec.train_fraction * static_cast<double>(q.size);
    q.train = static_cast<std::size_t>(std::floor(ideal));
    q.remainder = ideal - std::floor(ideal);
    assigned += q.train;
    quotas.push_back(std::move(q));
  }
  Rng rng(spec.seed);
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span(order), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t i = 0; assigned < total_train && i < order.size(); ++i) {
    auto& q = quotas[order[i]];
    if (q.train < q.size) {
      ++q.train;
      ++assigned;
    }
  }

  SplitResult out;
  for (const auto& q : quotas) {
    auto ids = user_units.at(q.user);
    shuffle(std::span(ids), rng);
    std::size_t taken = 0;
    for (std::size_t u : ids) {
      const auto& members = units[u].members;
      const bool to_train = taken + members.size() <= q.train;
      if (to_train) taken += members.size();
      for (std::size_t i : members) (to_train ? out.train : out.test).push_back(pairs[i]);
    }
  }
  return out;
}

void write_catalog(const std::filesystem::path& path, const Catalog& catalog) {
  std::string out;
  for (const auto& item : catalog) {
    out += catalog_item_json(item).dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

Catalog read_catalog(const std::filesystem::path& path) {
  return read_canonical<CatalogItem>(path, &catalog_item_from_json);
}

std::string pairs_to_jsonl(const std::vector<InteractionPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += pair_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

void write_pairs(const std::filesystem::path& path, const std::vector<InteractionPair>& pairs) {
  write_file(path, pairs_to_jsonl(pairs));
}

std::vector<InteractionPair> read_pairs(const std::filesystem::path& path) {
  return read_canonical<InteractionPair>(path, &pair_from_json);
}

std::string split_manifest_json(const SplitSpec& spec, const SplitResult& split) {
  json j = {{"seed", spec.seed},
            {"train_fraction", spec.train_fraction},
            {"n_pairs", split.train.size() + split.test.size()},
            {"n_train", split.train.size()},
            {"n_test", split.test.size()},
            {"train_crc32", crc32_hex(pairs_to_jsonl(split.train))},
            {"test_crc32", crc32_hex(pairs_to_jsonl(split.test))}};
  return j.dump(2);
}

}  // namespace recsearch
