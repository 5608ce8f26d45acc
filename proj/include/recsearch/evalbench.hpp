#pragma once

// Offline retrieval metrics, paired bootstrap significance, the serial latency
// harness, and plain-text/CSV/JSON table renderers.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recsearch/retrieval.hpp"

namespace recsearch {

struct EvalRun {
  std::vector<std::vector<std::string>> ranked;  // per query, best first, length <= k
  std::vector<std::string> truth;                // per query; empty means missing
  std::size_t k = 10;
};

/// 1 if the truth is within the first k of each list, else 0. Throws
/// MissingTruth, and InvalidArgument on a list with duplicates.
std::vector<double> per_query_hits(const EvalRun& run);
/// 1/rank of the truth within the first k, else 0.
std::vector<double> per_query_reciprocal_ranks(const EvalRun& run);

double recall_at_k(const EvalRun& run);
double mrr_at_k(const EvalRun& run);

struct BootstrapResult {
  double delta_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

/// Resamples query indices with replacement; each resample contributes
/// mean(a - b). Percentile CI, two-sided p = 2 * min tail, clamped to
/// [1/n_samples, 1].
BootstrapResult paired_bootstrap(std::span<const double> a, std::span<const double> b,
                                 std::size_t n_samples = 5000, double alpha = 0.05,
                                 std::uint64_t seed = 42);

/// Linear-interpolated quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

struct LatencyReport {
  std::string label;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double mean_ms = 0.0;
  double qps = 0.0;
  double encode_ms = 0.0;  // per-stage means
  double search_ms = 0.0;
  double lookup_ms = 0.0;
  std::size_t n_queries = 0;
  std::size_t warmup_discarded = 0;
};

using QueryFn = std::function<StageTimings(const std::string& query)>;

/// Serial single-threaded loop cycling through `queries`: `warmup` calls are
/// discarded, then `repeat` calls are timed.
LatencyReport latency_bench(const QueryFn& run_query, std::span<const std::string> queries,
                            std::size_t warmup = 50, std::size_t repeat = 1000,
                            std::string label = {});

struct ComparisonRow {
  std::string system;
  double recall = 0.0;
  double mrr = 0.0;
  std::optional<double> improvement;  // relative Recall@K gain vs the baseline row
  std::vector<double> hits;           // per query, for bootstrap
  std::vector<double> reciprocal_ranks;
};

struct SystemVariant {
  std::string name;
  std::function<std::vector<std::string>(const std::string& query, std::size_t k)> search;
};

/// Runs every variant over the same queries. The row named `baseline` has no
/// improvement value.
std::vector<ComparisonRow> run_comparison(std::span<const SystemVariant> variants,
                                  std::span<const std::string> queries,
                                  std::span<const std::string> truth, std::size_t k = 10,
                                  const std::string& baseline = "bm25");

using TextTable = std::vector<std::vector<std::string>>;  // first row is the header

std::string render_text_table(const TextTable& table);
std::string render_csv(const TextTable& table);

TextTable comparison_table(std::span<const ComparisonRow> rows, std::size_t k = 10);
TextTable latency_table(std::span<const LatencyReport> reports);

std::string comparison_json(std::span<const ComparisonRow> rows, std::size_t k = 10);
std::string latency_json(std::span<const LatencyReport> reports);

/// Fixed-width decimal.
std::string format_fixed(double v, int digits = 4);

}  // namespace recsearch
