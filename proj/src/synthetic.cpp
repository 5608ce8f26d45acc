#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_set>

#include "recsearch/error.hpp"
#include "recsearch/ingest.hpp"
#include "recsearch/random.hpp"

// Synthetic vocabulary-mismatch benchmark. Every latent concept owns two
// "technical" words (used by titles and features) and two "colloquial" words
// (used by queries). The two vocabularies are disjoint, so a query written
// entirely in colloquial words shares no token with its target title.

namespace recsearch {
namespace {

constexpr std::size_t kTechnicalSynonyms = 2;
constexpr std::size_t kColloquialSynonyms = 2;
constexpr std::size_t kTitleFillers = 24;
constexpr std::size_t kFeatureFillers = 12;
constexpr std::size_t kQueryFillers = 40;
constexpr std::size_t kBrands = 120;
constexpr std::size_t kQueryFillerCount = 2;
constexpr std::size_t kPairsPerUser = 5;

class WordFactory {
 public:
  explicit WordFactory(Rng& rng) : rng_(rng) {}

  std::string next() {
    static constexpr std::string_view kOnsets = "bdfghklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    for (;;) {
      std::string w;
      const std::size_t syllables = 2 + uniform_index(rng_, 2);
      for (std::size_t s = 0; s < syllables; ++s) {
        w.push_back(kOnsets[uniform_index(rng_, kOnsets.size())]);
        w.push_back(kVowels[uniform_index(rng_, kVowels.size())]);
      }
      if (uniform_index(rng_, 2) == 0) w.push_back(kOnsets[uniform_index(rng_, kOnsets.size())]);
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> batch(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  Rng& rng_;
  std::unordered_set<std::string> used_;
};

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string item_id_for(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "B%09zu", i);
  return buf;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_items < 10) throw Error(ErrorCode::InvalidArgument, "n_items must be >= 10");
  if (cfg.n_pairs < 1) throw Error(ErrorCode::InvalidArgument, "n_pairs must be >= 1");
  if (cfg.vocab_size < cfg.concepts_per_item || cfg.concepts_per_item == 0) {
    throw Error(ErrorCode::InvalidArgument, "vocab_size must be >= concepts_per_item >= 1");
  }
  if (!(cfg.mismatch_rate >= 0.0 && cfg.mismatch_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "mismatch_rate must lie in [0, 1]");
  }

  Rng vocab_rng(mix_seed(cfg.seed, 0));
  WordFactory words(vocab_rng);
  std::vector<std::array<std::string, kTechnicalSynonyms>> technical(cfg.vocab_size);
  std::vector<std::array<std::string, kColloquialSynonyms>> colloquial(cfg.vocab_size);
  for (std::size_t c = 0; c < cfg.vocab_size; ++c) {
    for (auto& w : technical[c]) w = words.next();
    for (auto& w : colloquial[c]) w = words.next();
  }
  const auto title_fillers = words.batch(kTitleFillers);
  const auto feature_fillers = words.batch(kFeatureFillers);
  const auto query_fillers = words.batch(kQueryFillers);
  const auto brands = words.batch(kBrands);

  SyntheticData data;
  data.catalog.reserve(cfg.n_items);
  // Per item: concept ids and which technical synonym the title uses.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> item_concepts(cfg.n_items);

  Rng item_rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> concept_ids(cfg.vocab_size);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    // Partial Fisher-Yates for k distinct concepts.
    for (std::size_t c = 0; c < cfg.vocab_size; ++c) concept_ids[c] = c;
    auto& concepts = item_concepts[i];
    for (std::size_t j = 0; j < cfg.concepts_per_item; ++j) {
      const std::size_t r = j + uniform_index(item_rng, cfg.vocab_size - j);
      std::swap(concept_ids[j], concept_ids[r]);
      concepts.emplace_back(concept_ids[j], uniform_index(item_rng, kTechnicalSynonyms));
    }

    CatalogItem item;
    item.item_id = item_id_for(i);
    std::string title = capitalize(pick(title_fillers, item_rng));
    for (const auto& [c, syn] : concepts) title += " " + capitalize(technical[c][syn]);
    item.title = std::move(title);
    item.brand = capitalize(pick(brands, item_rng));
    for (const auto& [c, syn] : concepts) {
      item.features.push_back(technical[c][(syn + 1) % kTechnicalSynonyms] + " " +
                              pick(feature_fillers, item_rng));
    }
    item.description = pick(title_fillers, item_rng) + " " + pick(feature_fillers, item_rng) +
                       " " + pick(title_fillers, item_rng);
    item.price = std::round((5.0 + 95.0 * uniform01(item_rng)) * 100.0) / 100.0;
    item.image_url = "https://img.example.com/" + item.item_id + ".jpg";
    data.catalog.push_back(std::move(item));
  }

  Rng pair_rng(mix_seed(cfg.seed, 2));
  const std::size_t n_users = std::max<std::size_t>(1, cfg.n_pairs / kPairsPerUser);
  data.pairs.reserve(cfg.n_pairs);
  for (std::size_t p = 0; p < cfg.n_pairs; ++p) {
    const std::size_t item = uniform_index(pair_rng, cfg.n_items);
    std::vector<std::string> q;
    for (const auto& [c, syn] : item_concepts[item]) {
      if (uniform01(pair_rng) < cfg.mismatch_rate) {
        q.push_back(colloquial[c][uniform_index(pair_rng, kColloquialSynonyms)]);
      } else {
        q.push_back(technical[c][syn]);
      }
    }
    for (std::size_t f = 0; f < kQueryFillerCount; ++f) q.push_back(pick(query_fillers, pair_rng));
    shuffle(std::span(q), pair_rng);

    InteractionPair pair;
    for (std::size_t t = 0; t < q.size(); ++t) {
      if (t) pair.query_text.push_back(' ');
      pair.query_text += q[t];
    }
    pair.item_id = data.catalog[item].item_id;
    // Users own contiguous blocks of pairs; the tail joins the last user so
    // every user keeps at least kPairsPerUser interactions.
    pair.user_id = "U" + std::to_string(std::min(p / kPairsPerUser, n_users - 1));
    pair.rating = uniform_index(pair_rng, 2) == 0 ? 4.0 : 5.0;
    data.pairs.push_back(std::move(pair));
  }
  return data;
}

}  // namespace recsearch
