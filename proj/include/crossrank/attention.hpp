#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "crossrank/error.hpp"
#include "crossrank/matrix.hpp"

namespace crossrank {

/// Token embeddings of one image, one row per token.
using TokenSequence = Matrix;

/// Single-head projection weights. With use_softmax the scores go through
/// a row softmax before weighting the values; without it the scaled score
/// matrix multiplies the values directly.
struct AttentionParams {
  Matrix w_q, w_k, w_v;  // dim_in x d_k each
  bool use_softmax = true;

  std::size_t dim_in() const { return w_q.rows(); }
  std::size_t d_k() const { return w_q.cols(); }

  void validate() const {
    if (d_k() < 1) fail_validation("attention: d_k must be >= 1");
    if (!w_q.same_shape(w_k) || !w_q.same_shape(w_v))
      fail_dimension("attention: projection shapes differ");
    for (const Matrix* m : {&w_q, &w_k, &w_v})
      for (double v : m->data())
        if (!std::isfinite(v)) fail_validation("attention: non-finite weight");
  }
};

namespace detail {

/// Numerically stable row softmax.
inline Matrix row_softmax(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    double mx = scores(i, 0);
    for (std::size_t j = 1; j < scores.cols(); ++j)
      mx = std::max(mx, scores(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      out(i, j) = std::exp(scores(i, j) - mx);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < scores.cols(); ++j) out(i, j) /= sum;
  }
  return out;
}

inline Matrix scaled_scores(const TokenSequence& a, const TokenSequence& b,
                            const AttentionParams& p) {
  p.validate();
  if (a.cols() != p.dim_in() || b.cols() != p.dim_in())
    fail_dimension("attention: token dim " + std::to_string(a.cols()) + "/" +
                   std::to_string(b.cols()) + " vs weights " +
                   std::to_string(p.dim_in()));
  if (a.rows() < 1 || b.rows() < 1)
    fail_validation("attention: empty token sequence");
  const Matrix q = matmul(a, p.w_q);
  const Matrix k = matmul(b, p.w_k);
  Matrix scores = matmul(q, transposed(k));
  const double inv = 1.0 / std::sqrt(static_cast<double>(p.d_k()));
  for (double& v : scores.data()) v *= inv;
  return scores;
}

}  // namespace detail

/// Attention of `a` conditioned on `b`: queries from a, keys and values
/// from b. Output is one row of d_k features per token of a.
inline Matrix cross_attention(const TokenSequence& a, const TokenSequence& b,
                              const AttentionParams& p) {
  Matrix scores = detail::scaled_scores(a, b, p);
  const Matrix v = matmul(b, p.w_v);
  if (p.use_softmax) return matmul(detail::row_softmax(scores), v);
  return matmul(scores, v);
}

/// Self-attention is cross-attention of an image with itself.
inline Matrix self_attention(const TokenSequence& a, const AttentionParams& p) {
  return cross_attention(a, a, p);
}

struct AttentionGradients {
  Matrix d_a, d_b, d_wq, d_wk, d_wv;
};

/// Analytic gradients of cross_attention with respect to both token
/// sequences and all three projections, given the upstream gradient of
/// the output.
inline AttentionGradients attention_backward(const TokenSequence& a,
                                             const TokenSequence& b,
                                             const AttentionParams& p,
                                             const Matrix& upstream) {
  Matrix scores = detail::scaled_scores(a, b, p);
  if (upstream.rows() != a.rows() || upstream.cols() != p.d_k())
    fail_dimension("attention_backward: upstream gradient shape mismatch");

  const Matrix q = matmul(a, p.w_q);
  const Matrix k = matmul(b, p.w_k);
  const Matrix v = matmul(b, p.w_v);
  const double inv = 1.0 / std::sqrt(static_cast<double>(p.d_k()));

  Matrix probs;  // rows of the matrix actually multiplied against V
  if (p.use_softmax)
    probs = detail::row_softmax(scores);
  else
    probs = scores;

  const Matrix d_v = matmul(transposed(probs), upstream);
  Matrix d_probs = matmul(upstream, transposed(v));

  Matrix d_scores;
  if (p.use_softmax) {
    // per row: dS = P .* (dP - sum(dP .* P))
    d_scores = Matrix(scores.rows(), scores.cols());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < scores.cols(); ++j)
        dot += d_probs(i, j) * probs(i, j);
      for (std::size_t j = 0; j < scores.cols(); ++j)
        d_scores(i, j) = probs(i, j) * (d_probs(i, j) - dot);
    }
  } else {
    d_scores = std::move(d_probs);
  }
  for (double& x : d_scores.data()) x *= inv;

  const Matrix d_q = matmul(d_scores, k);
  const Matrix d_k = matmul(transposed(d_scores), q);

  AttentionGradients g;
  g.d_wq = matmul(transposed(a), d_q);
  g.d_wk = matmul(transposed(b), d_k);
  g.d_wv = matmul(transposed(b), d_v);
  g.d_a = matmul(d_q, transposed(p.w_q));
  g.d_b = matmul(d_k, transposed(p.w_k));
  const Matrix d_b_from_v = matmul(d_v, transposed(p.w_v));
  for (std::size_t i = 0; i < g.d_b.rows(); ++i)
    for (std::size_t j = 0; j < g.d_b.cols(); ++j)
      g.d_b(i, j) += d_b_from_v(i, j);
  return g;
}

/// Mean over token rows, the pooling used to turn token-level attention
/// output into one image-level feature row.
inline std::vector<double> mean_pool(const Matrix& tokens) {
  if (tokens.rows() == 0) fail_validation("mean_pool: empty token matrix");
  std::vector<double> out(tokens.cols(), 0.0);
  for (std::size_t i = 0; i < tokens.rows(); ++i)
    for (std::size_t j = 0; j < tokens.cols(); ++j) out[j] += tokens(i, j);
  for (double& v : out) v /= static_cast<double>(tokens.rows());
  return out;
}

}  // namespace crossrank
