#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "crossrank/embedding_set.hpp"
#include "crossrank/error.hpp"

namespace crossrank {

/// One query's ranked gallery with per-position relevance flags
/// (gallery class == query class). Metrics depend only on the relevance
/// sequence, never on the ids themselves.
struct RetrievalResult {
  std::string query_id;
  std::vector<std::string> ranked_gallery_ids;
  std::vector<char> relevance;

  void validate() const {
    if (ranked_gallery_ids.size() != relevance.size())
      fail_validation("result \"" + query_id +
                      "\": id and relevance lengths differ");
    std::unordered_set<std::string> seen;
    for (const auto& id : ranked_gallery_ids)
      if (!seen.insert(id).second)
        fail_validation("result \"" + query_id + "\": duplicate gallery id \"" +
                        id + "\"");
  }

  int total_relevant() const {
    int r = 0;
    for (char c : relevance) r += c ? 1 : 0;
    return r;
  }
};

/// AP@k denominator convention. MinKR keeps a perfect top-k list at 1.0;
/// TotalRelevant divides by R regardless of k.
enum class ApDenominator { MinKR, TotalRelevant };

inline double precision_at_k(const RetrievalResult& result, int k) {
  result.validate();
  const int n = static_cast<int>(result.relevance.size());
  if (k < 1 || k > n)
    fail_validation("precision_at_k: k=" + std::to_string(k) +
                    " out of range [1, " + std::to_string(n) + "]");
  int hits = 0;
  for (int i = 0; i < k; ++i) hits += result.relevance[i] ? 1 : 0;
  return static_cast<double>(hits) / k;
}

/// AP@k = sum_{i<=k} P(i) * rel(i) / min(k, R); k = nullopt means the whole
/// list, which makes the denominator exactly R.
inline double average_precision(const RetrievalResult& result,
                                std::optional<int> k = std::nullopt,
                                ApDenominator denom = ApDenominator::MinKR) {
  result.validate();
  const int n = static_cast<int>(result.relevance.size());
  const int kk = k ? *k : n;
  if (kk < 1 || kk > n)
    fail_validation("average_precision: k=" + std::to_string(kk) +
                    " out of range [1, " + std::to_string(n) + "]");
  const int total = result.total_relevant();
  if (total == 0)
    fail_validation("query \"" + result.query_id +
                    "\": query class absent from gallery");
  int hits = 0;
  double acc = 0.0;
  for (int i = 0; i < kk; ++i) {
    if (result.relevance[i]) {
      ++hits;
      acc += static_cast<double>(hits) / (i + 1);
    }
  }
  const int d = denom == ApDenominator::MinKR ? std::min(kk, total) : total;
  return acc / d;
}

inline double mean_average_precision(std::span<const RetrievalResult> results,
                                     std::optional<int> k = std::nullopt,
                                     ApDenominator denom = ApDenominator::MinKR) {
  if (results.empty()) fail_validation("mean_average_precision: no results");
  double acc = 0.0;
  for (const auto& r : results) acc += average_precision(r, k, denom);
  return acc / static_cast<double>(results.size());
}

/// Builds a result from a ranking permutation over a labeled gallery.
inline RetrievalResult make_retrieval_result(
    const std::string& query_id, int query_class,
    std::span<const int> ranking, const EmbeddingSet& gallery) {
  RetrievalResult r;
  r.query_id = query_id;
  r.ranked_gallery_ids.reserve(ranking.size());
  r.relevance.reserve(ranking.size());
  for (int g : ranking) {
    r.ranked_gallery_ids.push_back(gallery.labels[g].id);
    r.relevance.push_back(gallery.labels[g].class_id == query_class ? 1 : 0);
  }
  return r;
}

}  // namespace crossrank
