#include "recsearch/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "recsearch/random.hpp"

namespace recsearch {
namespace {

void check_run(const EvalRun& run) {
  if (run.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (run.truth.size() != run.ranked.size()) {
    throw Error(ErrorCode::MissingTruth, std::to_string(run.ranked.size()) + " ranked lists, " +
                                             std::to_string(run.truth.size()) + " truths");
  }
  for (std::size_t i = 0; i < run.ranked.size(); ++i) {
    if (run.truth[i].empty()) {
      throw Error(ErrorCode::MissingTruth, "query " + std::to_string(i) + " has no truth");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : run.ranked[i]) {
      if (!seen.insert(id).second) {
        throw Error(ErrorCode::InvalidArgument, "duplicate item in ranked list " + std::to_string(i));
      }
    }
  }
}

// 1-based rank of the truth within the first k, or 0.
std::size_t truth_rank(const std::vector<std::string>& list, const std::string& truth,
                       std::size_t k) {
  const std::size_t n = std::min(k, list.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (list[r] == truth) return r + 1;
  }
  return 0;
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<double> per_query_hits(const EvalRun& run) {
  check_run(run);
  std::vector<double> out(run.ranked.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = truth_rank(run.ranked[i], run.truth[i], run.k) > 0 ? 1.0 : 0.0;
  }
  return out;
}

std::vector<double> per_query_reciprocal_ranks(const EvalRun& run) {
  check_run(run);
  std::vector<double> out(run.ranked.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t r = truth_rank(run.ranked[i], run.truth[i], run.k);
    out[i] = r > 0 ? 1.0 / static_cast<double>(r) : 0.0;
  }
  return out;
}

double recall_at_k(const EvalRun& run) { return mean(per_query_hits(run)); }

double mrr_at_k(const EvalRun& run) { return mean(per_query_reciprocal_ranks(run)); }

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult paired_bootstrap(std::span<const double> a, std::span<const double> b,
                                 std::size_t n_samples, double alpha, std::uint64_t seed) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
  }
  if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two paired values");
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha in (0, 1)");

  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];

  BootstrapResult res;
  res.delta_mean = mean(a) - mean(b);

  Rng rng(seed);
  std::vector<double> deltas(n_samples);
  std::size_t le_zero = 0, ge_zero = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += diff[uniform_index(rng, n)];
    const double d = sum / static_cast<double>(n);
    deltas[s] = d;
    le_zero += d <= 0.0;
    ge_zero += d >= 0.0;
  }
  std::sort(deltas.begin(), deltas.end());
  res.ci_low = sorted_quantile(deltas, alpha / 2.0);
  res.ci_high = sorted_quantile(deltas, 1.0 - alpha / 2.0);
  const double ns = static_cast<double>(n_samples);
  const double p = 2.0 * std::min(static_cast<double>(le_zero), static_cast<double>(ge_zero)) / ns;
  res.p_value = std::clamp(p, 1.0 / ns, 1.0);
  return res;
}

LatencyReport latency_bench(const QueryFn& run_query, std::span<const std::string> queries,
                            std::size_t warmup, std::size_t repeat, std::string label) {
  if (queries.empty()) throw Error(ErrorCode::InvalidArgument, "no queries to benchmark");
  if (repeat < 1) throw Error(ErrorCode::InvalidArgument, "repeat must be >= 1");
  for (std::size_t i = 0; i < warmup; ++i) run_query(queries[i % queries.size()]);

  std::vector<double> wall(repeat);
  double enc = 0.0, srch = 0.0, look = 0.0;
  const auto loop_start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < repeat; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const StageTimings st = run_query(queries[(warmup + i) % queries.size()]);
    wall[i] = ms_since(t0);
    enc += st.encode_ms;
    srch += st.search_ms;
    look += st.lookup_ms;
  }
  const double elapsed_s = ms_since(loop_start) / 1000.0;

  LatencyReport r;
  r.label = std::move(label);
  r.n_queries = repeat;
  r.warmup_discarded = warmup;
  r.mean_ms = mean(wall);
  std::sort(wall.begin(), wall.end());
  r.p50_ms = sorted_quantile(wall, 0.50);
  r.p99_ms = sorted_quantile(wall, 0.99);
  r.qps = static_cast<double>(repeat) / std::max(elapsed_s, 1e-12);
  const double nq = static_cast<double>(repeat);
  r.encode_ms = enc / nq;
  r.search_ms = srch / nq;
  r.lookup_ms = look / nq;
  return r;
}

std::vector<ComparisonRow> run_comparison(std::span<const SystemVariant> variants,
                                  std::span<const std::string> queries,
                                  std::span<const std::string> truth, std::size_t k,
                                  const std::string& baseline) {
  std::vector<ComparisonRow> rows;
  for (const auto& v : variants) {
    EvalRun run;
    run.k = k;
    run.truth.assign(truth.begin(), truth.end());
    run.ranked.reserve(queries.size());
    for (const auto& q : queries) run.ranked.push_back(v.search(q, k));
    ComparisonRow row;
    row.system = v.name;
    row.hits = per_query_hits(run);
    row.reciprocal_ranks = per_query_reciprocal_ranks(run);
    row.recall = mean(row.hits);
    row.mrr = mean(row.reciprocal_ranks);
    rows.push_back(std::move(row));
  }
  const auto base = std::find_if(rows.begin(), rows.end(),
                                 [&](const ComparisonRow& r) { return r.system == baseline; });
  if (base != rows.end() && base->recall > 0.0) {
    const double ref = base->recall;
    for (auto& r : rows) {
      if (r.system != baseline) r.improvement = (r.recall - ref) / ref;
    }
  }
  return rows;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string render_text_table(const TextTable& table) {
  if (table.empty()) return {};
  std::vector<std::size_t> width;
  for (const auto& row : table) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < row.size() ? row[c] : "";
      // First column left-aligned, the rest right-aligned.
      if (c == 0) {
        out << cell << std::string(width[c] - cell.size(), ' ');
      } else {
        out << "  " << std::string(width[c] - cell.size(), ' ') << cell;
      }
    }
    out << '\n';
  };
  emit(table.front());
  std::size_t total = 0;
  for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
  out << std::string(total, '-') << '\n';
  for (std::size_t r = 1; r < table.size(); ++r) emit(table[r]);
  return out.str();
}

std::string render_csv(const TextTable& table) {
  std::ostringstream out;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      const std::string& cell = row[c];
      if (cell.find_first_of(",\"\n") != std::string::npos) {
        out << '"';
        for (char ch : cell) {
          if (ch == '"') out << '"';
          out << ch;
        }
        out << '"';
      } else {
        out << cell;
      }
    }
    out << '\n';
  }
  return out.str();
}

TextTable comparison_table(std::span<const ComparisonRow> rows, std::size_t k) {
  const std::string ks = std::to_string(k);
  TextTable t{{"System", "Recall@" + ks, "MRR@" + ks, "Improvement vs. BM25"}};
  for (const auto& r : rows) {
    std::string imp = "--";
    if (r.improvement) {
      imp = (*r.improvement >= 0 ? "+" : "") + format_fixed(100.0 * *r.improvement, 1) + "%";
    }
    t.push_back({r.system, format_fixed(r.recall), format_fixed(r.mrr), imp});
  }
  return t;
}

TextTable latency_table(std::span<const LatencyReport> reports) {
  TextTable t{{"Configuration", "p50 (ms)", "p99 (ms)", "mean (ms)", "QPS", "encode", "search",
               "lookup", "n"}};
  for (const auto& r : reports) {
    t.push_back({r.label, format_fixed(r.p50_ms, 3), format_fixed(r.p99_ms, 3),
                 format_fixed(r.mean_ms, 3), format_fixed(r.qps, 1), format_fixed(r.encode_ms, 3),
                 format_fixed(r.search_ms, 3), format_fixed(r.lookup_ms, 3),
                 std::to_string(r.n_queries)});
  }
  return t;
}

std::string comparison_json(std::span<const ComparisonRow> rows, std::size_t k) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row{{"system", r.system},
                       {"k", k},
                       {"recall", r.recall},
                       {"mrr", r.mrr},
                       {"n_queries", r.hits.size()}};
    row["improvement_vs_bm25"] = r.improvement ? nlohmann::json(*r.improvement) : nlohmann::json();
    out.push_back(std::move(row));
  }
  return out.dump(2);
}

std::string latency_json(std::span<const LatencyReport> reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    out.push_back({{"label", r.label},
                   {"p50_ms", r.p50_ms},
                   {"p99_ms", r.p99_ms},
                   {"mean_ms", r.mean_ms},
                   {"qps", r.qps},
                   {"stages_ms", {{"encode", r.encode_ms}, {"search", r.search_ms}, {"lookup", r.lookup_ms}}},
                   {"n_queries", r.n_queries},
                   {"warmup_discarded", r.warmup_discarded}});
  }
  return out.dump(2);
}

}  // namespace recsearch
