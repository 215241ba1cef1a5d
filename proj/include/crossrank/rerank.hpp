#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "crossrank/embedding_set.hpp"
#include "crossrank/error.hpp"
#include "crossrank/ranking.hpp"

namespace crossrank {

/// Which query rank feeds the alpha schedule inside the penalty sum:
/// the rank of the item being updated (QueryRankOfI) or the rank of the
/// gallery neighbour contributing the term (QueryRankOfJ).
enum class AlphaVariant { QueryRankOfI, QueryRankOfJ };

inline std::string to_string(AlphaVariant v) {
  return v == AlphaVariant::QueryRankOfI ? "query-i" : "query-j";
}

/// Parameters of the iterative re-ranking update
///
///   d[i] += beta * sum_{j in J} alpha(rho) * gamma * r_ji * d_gg(j, i)
///
/// where J holds the m_limit query-nearest gallery items under the current
/// ranking, r_ji is the gallery rank of i in j's list and d_gg(j, i) their
/// gallery distance. Penalties are non-negative, so distances never
/// decrease and only relative growth reorders the list.
///
/// Defaults: the alpha argument is the updated item's own query rank and
/// the sum runs over the 16 query-nearest items. This protects a coherent
/// head of the list while the tail is reordered by affinity to it; summing
/// over the whole gallery instead lets the (much larger) remainder drown
/// that signal and measurably degrades ranking quality, so "all" is opt-in.
struct RerankConfig {
  double beta = 0.1;             // overall re-rank influence
  double gamma = 0.01;           // gallery-rank scale
  int k_cut = 16;                // rank threshold K of the alpha schedule
  double alpha_low_slope = 0.01; // alpha(r) = slope * r for r <= k_cut
  std::optional<int> m_limit = 16;  // nullopt = whole gallery
  int max_iters = 1000;
  AlphaVariant alpha_arg = AlphaVariant::QueryRankOfI;

  void validate() const {
    if (beta < 0 || gamma < 0 || alpha_low_slope < 0)
      fail_validation("beta, gamma and alpha_low_slope must be >= 0");
    if (k_cut < 1) fail_validation("k_cut must be >= 1");
    if (max_iters < 1) fail_validation("max_iters must be >= 1");
    if (m_limit && *m_limit < 1) fail_validation("m_limit must be >= 1");
  }
};

/// alpha(r) = slope * r up to and including k_cut, 1.0 beyond it.
inline double alpha(int rank, const RerankConfig& cfg) {
  if (rank < 1) fail_validation("alpha: rank must be >= 1");
  return rank <= cfg.k_cut ? cfg.alpha_low_slope * rank : 1.0;
}

struct RerankState {
  std::vector<double> distances;  // current query-gallery distances
  int iteration = 0;
  std::vector<int> ranking;  // gallery indices ascending by distance
};

inline RerankState init_rerank(std::span<const double> query_row) {
  if (query_row.empty()) fail_validation("init_rerank: empty gallery");
  RerankState s;
  s.distances.assign(query_row.begin(), query_row.end());
  s.ranking = ascending_order(s.distances);
  return s;
}

inline RerankState rerank_step(const RerankState& state,
                               const DistanceMatrix& gg_dist,
                               const RankMatrix& gg_ranks,
                               const RerankConfig& cfg) {
  cfg.validate();
  const std::size_t g = state.distances.size();
  if (gg_dist.rows != g || gg_dist.cols != g)
    fail_dimension("rerank_step: gallery distance matrix is " +
                   std::to_string(gg_dist.rows) + "x" +
                   std::to_string(gg_dist.cols) + " for gallery size " +
                   std::to_string(g));
  if (gg_ranks.rows != g || gg_ranks.cols != g)
    fail_dimension("rerank_step: gallery rank matrix size mismatch");
  if (state.ranking.size() != g)
    fail_dimension("rerank_step: ranking size mismatch");

  std::vector<int> query_rank(g);
  for (std::size_t pos = 0; pos < g; ++pos)
    query_rank[state.ranking[pos]] = static_cast<int>(pos) + 1;

  const std::size_t m =
      cfg.m_limit ? std::min<std::size_t>(*cfg.m_limit, g) : g;

  RerankState next;
  next.distances.resize(g);
  next.iteration = state.iteration + 1;
  for (std::size_t i = 0; i < g; ++i) {
    double penalty = 0.0;
    for (std::size_t pos = 0; pos < m; ++pos) {
      const int j = state.ranking[pos];
      const int rho = cfg.alpha_arg == AlphaVariant::QueryRankOfJ
                          ? query_rank[j]
                          : query_rank[i];
      penalty += alpha(rho, cfg) * cfg.gamma *
                 gg_ranks.rank_at(j, i) * gg_dist.at(j, i);
    }
    next.distances[i] = state.distances[i] + cfg.beta * penalty;
  }
  next.ranking = ascending_order(next.distances);
  return next;
}

struct TraceOptions {
  bool record = false;
  int dense_until = 32;  // keep every iteration up to here ...
  int stride = 8;        // ... then every stride-th (final always kept)
};

struct RerankTrace {
  struct Snapshot {
    int iteration;
    std::vector<int> ranking;
  };
  std::vector<Snapshot> snapshots;
  std::optional<int> converged_at;  // nullopt when max_iters was hit
};

/// Iterates rerank_step until the ranking permutation repeats on two
/// consecutive iterations (raw distances grow without bound, so the
/// permutation is the only stable thing to test) or max_iters is reached.
inline std::pair<RerankState, RerankTrace> rerank_until_converged(
    std::span<const double> query_row, const DistanceMatrix& gg_dist,
    const RankMatrix& gg_ranks, const RerankConfig& cfg,
    const TraceOptions& trace_opts = {}) {
  cfg.validate();
  RerankState state = init_rerank(query_row);
  RerankTrace trace;
  auto want = [&](int t) {
    return t <= trace_opts.dense_until || trace_opts.stride <= 1 ||
           t % trace_opts.stride == 0;
  };
  auto snap = [&](const RerankState& s) {
    if (trace_opts.record &&
        (trace.snapshots.empty() ||
         trace.snapshots.back().iteration != s.iteration))
      trace.snapshots.push_back({s.iteration, s.ranking});
  };
  snap(state);

  for (int t = 1; t <= cfg.max_iters; ++t) {
    RerankState next = rerank_step(state, gg_dist, gg_ranks, cfg);
    const bool fixed = next.ranking == state.ranking;
    if (trace_opts.record && (want(t) || fixed)) snap(next);
    state = std::move(next);
    if (fixed) {
      trace.converged_at = t;
      return {std::move(state), std::move(trace)};
    }
  }
  snap(state);  // max_iters hit; keep the terminal ranking either way
  return {std::move(state), std::move(trace)};
}

struct QueryRerankResult {
  std::string query_id;
  RerankState state;
  RerankTrace trace;
};

/// Re-ranks every query independently against the gallery. The
/// gallery-gallery distance and rank matrices are built once and shared;
/// per-query work is pure, so queries are farmed out across threads with
/// results written to fixed slots (output order never depends on the
/// thread count).
inline std::vector<QueryRerankResult> rerank_gallery_against_queries(
    const EmbeddingSet& queries, const EmbeddingSet& gallery,
    const RerankConfig& cfg, const TraceOptions& trace_opts = {},
    unsigned threads = 0) {
  cfg.validate();
  if (queries.dim != gallery.dim)
    fail_dimension("query dim " + std::to_string(queries.dim) +
                   " does not match gallery dim " + std::to_string(gallery.dim));
  if (gallery.count == 0) fail_validation("empty gallery");

  const DistanceMatrix gg = pairwise_distances(gallery, gallery);
  const RankMatrix gg_ranks = rank_rows(gg);
  const DistanceMatrix qg = pairwise_distances(queries, gallery);

  std::vector<QueryRerankResult> results(queries.count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(queries.count, 1));

  std::atomic<std::size_t> next_query{0};
  auto worker = [&] {
    for (std::size_t q = next_query.fetch_add(1); q < queries.count;
         q = next_query.fetch_add(1)) {
      auto [state, trace] = rerank_until_converged(
          {qg.values.data() + q * qg.cols, qg.cols}, gg, gg_ranks, cfg,
          trace_opts);
      results[q] = {queries.labels[q].id, std::move(state), std::move(trace)};
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace crossrank
