#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "crossrank/embedding_set.hpp"
#include "crossrank/error.hpp"

namespace crossrank {

/// Pairwise Euclidean distances between two embedding sets.
/// Entries are always >= 0; for unit-norm inputs no entry exceeds 2.
struct DistanceMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;  // row-major
  std::vector<std::string> row_ids, col_ids;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

/// Per-reference ascending-distance orderings with 1-based ranks.
/// ranks[i][j] is the position of column j when row i is sorted ascending;
/// order[i][k] is the column at rank k+1. Ties break toward the lower
/// column index, so results are deterministic.
struct RankMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<int> ranks;
  std::vector<int> order;

  int rank_at(std::size_t i, std::size_t j) const { return ranks[i * cols + j]; }
  int order_at(std::size_t i, std::size_t k) const { return order[i * cols + k]; }
};

/// Indices 0..n-1 sorted ascending by (value, index). The single tie rule
/// shared by every ranking consumer in this library.
inline std::vector<int> ascending_order(std::span<const double> values) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  return idx;
}

/// d(i,j) = ||a_i - b_j||_2 via the expansion |a|^2 + |b|^2 - 2 a.b, with
/// tiny negative squares clamped to zero before the square root. When `a`
/// and `b` are the same object the result is exactly symmetric with a
/// zero diagonal.
inline DistanceMatrix pairwise_distances(const EmbeddingSet& a,
                                         const EmbeddingSet& b) {
  if (a.dim != b.dim)
    fail_dimension("pairwise_distances: dim " + std::to_string(a.dim) +
                   " vs " + std::to_string(b.dim));

  auto sq_norms = [](const EmbeddingSet& s) {
    std::vector<double> n(s.count);
    for (std::size_t i = 0; i < s.count; ++i) {
      double acc = 0.0;
      for (float v : s.row(i)) acc += static_cast<double>(v) * v;
      n[i] = acc;
    }
    return n;
  };

  DistanceMatrix d;
  d.rows = a.count;
  d.cols = b.count;
  d.values.assign(a.count * b.count, 0.0);
  d.row_ids = a.ids();
  d.col_ids = b.ids();

  const auto na = sq_norms(a);
  const bool self = &a == &b;
  const auto nb = self ? na : sq_norms(b);

  auto entry = [&](std::size_t i, std::size_t j) {
    double dot = 0.0;
    const auto ra = a.row(i);
    const auto rb = b.row(j);
    for (std::size_t k = 0; k < ra.size(); ++k)
      dot += static_cast<double>(ra[k]) * rb[k];
    const double sq = na[i] + nb[j] - 2.0 * dot;
    return std::sqrt(sq > 0.0 ? sq : 0.0);
  };

  if (self) {
    for (std::size_t i = 0; i < a.count; ++i)
      for (std::size_t j = i + 1; j < a.count; ++j) {
        const double v = entry(i, j);
        d.at(i, j) = v;
        d.at(j, i) = v;
      }
  } else {
    for (std::size_t i = 0; i < a.count; ++i)
      for (std::size_t j = 0; j < b.count; ++j) d.at(i, j) = entry(i, j);
  }
  return d;
}

/// Ranks every row of `d` ascending. With a zero diagonal the self item
/// lands at rank 1; downstream penalty sums are unaffected because its
/// distance term is zero.
inline RankMatrix rank_rows(const DistanceMatrix& d) {
  RankMatrix r;
  r.rows = d.rows;
  r.cols = d.cols;
  r.ranks.resize(d.rows * d.cols);
  r.order.resize(d.rows * d.cols);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const auto ord =
        ascending_order({d.values.data() + i * d.cols, d.cols});
    for (std::size_t k = 0; k < d.cols; ++k) {
      r.order[i * d.cols + k] = ord[k];
      r.ranks[i * d.cols + ord[k]] = static_cast<int>(k) + 1;
    }
  }
  return r;
}

}  // namespace crossrank
