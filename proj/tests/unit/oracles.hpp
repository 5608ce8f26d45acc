#pragma once

// Straightforward reference implementations used to check the optimized code.
// They share no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Doc = std::pair<std::string, std::vector<std::string>>;

/// Okapi BM25 of every document, by direct counting.
inline std::map<std::string, double> bm25_scores(const std::vector<Doc>& docs,
                                                 const std::vector<std::string>& query,
                                                 double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double total = 0;
  for (const auto& d : docs) total += static_cast<double>(d.second.size());
  const double avgdl = total / n;
  std::map<std::string, double> out;
  for (const auto& [id, toks] : docs) {
    double s = 0;
    for (const auto& term : query) {
      double df = 0;
      for (const auto& other : docs) {
        if (std::find(other.second.begin(), other.second.end(), term) != other.second.end()) df += 1;
      }
      const double tf = static_cast<double>(std::count(toks.begin(), toks.end(), term));
      if (tf == 0) continue;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double dl = static_cast<double>(toks.size());
      s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl));
    }
    out[id] = s;
  }
  return out;
}

/// Full sort by (score desc, id asc), truncated to k.
inline std::vector<std::pair<std::string, double>> top_k(const std::map<std::string, double>& scores,
                                                         std::size_t k, bool drop_zero = false) {
  std::vector<std::pair<std::string, double>> v;
  for (const auto& [id, s] : scores) {
    if (drop_zero && s == 0.0) continue;
    v.emplace_back(id, s);
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (v.size() > k) v.resize(k);
  return v;
}

/// In-batch softmax cross-entropy without log-sum-exp tricks (fine for the
/// small logits used in tests).
inline double mnrl(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& D, double tau) {
  double loss = 0;
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    double z = 0;
    for (Eigen::Index j = 0; j < D.rows(); ++j) z += std::exp(Q.row(i).dot(D.row(j)) / tau);
    loss += -std::log(std::exp(Q.row(i).dot(D.row(i)) / tau) / z);
  }
  return loss / static_cast<double>(Q.rows());
}

inline double recall(const std::vector<std::vector<std::string>>& ranked,
                     const std::vector<std::string>& truth, std::size_t k) {
  double hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t r = 0; r < std::min(k, ranked[i].size()); ++r) {
      if (ranked[i][r] == truth[i]) {
        hits += 1;
        break;
      }
    }
  }
  return hits / static_cast<double>(ranked.size());
}

inline double mrr(const std::vector<std::vector<std::string>>& ranked,
                  const std::vector<std::string>& truth, std::size_t k) {
  double total = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t r = 0; r < std::min(k, ranked[i].size()); ++r) {
      if (ranked[i][r] == truth[i]) {
        total += 1.0 / static_cast<double>(r + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(ranked.size());
}

/// Linear-interpolated quantile of an unsorted sample.
inline double quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace oracle
