#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "crossrank/embedding_set.hpp"
#include "crossrank/error.hpp"
#include "crossrank/matrix.hpp"

namespace crossrank {

struct LossWeights {
  double lambda_triplet = 1.0;
  double lambda_cad = 1.0;
  double lambda_ce = 1.0;
  double margin = 0.3;
  double temperature = 1.0;

  void validate() const {
    if (lambda_triplet < 0 || lambda_cad < 0 || lambda_ce < 0 || margin < 0)
      fail_validation("loss weights and margin must be >= 0");
    if (temperature <= 0) fail_validation("temperature must be > 0");
  }
};

/// A two-domain mini-batch of per-image feature rows with class labels and
/// optional classification logits.
struct DomainBatch {
  Matrix embeddings_a, embeddings_b;
  std::vector<int> labels_a, labels_b;
  std::optional<Matrix> logits_a, logits_b;

  void validate() const {
    if (embeddings_a.rows() != labels_a.size() ||
        embeddings_b.rows() != labels_b.size())
      fail_validation("batch: row/label count mismatch");
    if (embeddings_a.cols() != embeddings_b.cols())
      fail_dimension("batch: feature dims differ across domains");
  }

  const Matrix& embeddings(Domain d) const {
    return d == Domain::A ? embeddings_a : embeddings_b;
  }
  const std::vector<int>& labels(Domain d) const {
    return d == Domain::A ? labels_a : labels_b;
  }
};

namespace detail {

inline double row_distance(const Matrix& x, std::size_t i, const Matrix& y,
                           std::size_t j) {
  double acc = 0.0;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double d = x(i, c) - y(j, c);
    acc += d * d;
  }
  return std::sqrt(acc);
}

struct MinedTriplet {
  std::size_t anchor, pos, neg;
  double d_pos, d_neg;
  bool active;  // hinge > 0
};

/// Batch-hard mining: per anchor, the farthest same-class and nearest
/// different-class row of the pool. For a within-domain term the anchor is
/// excluded as its own positive.
inline std::vector<MinedTriplet> mine_triplets(Domain m1, Domain m2,
                                               const DomainBatch& batch,
                                               double margin) {
  batch.validate();
  const Matrix& anc = batch.embeddings(m1);
  const auto& anc_labels = batch.labels(m1);
  const Matrix& pool = batch.embeddings(m2);
  const auto& pool_labels = batch.labels(m2);
  const bool same_domain = m1 == m2;

  std::vector<MinedTriplet> out;
  out.reserve(anc.rows());
  for (std::size_t i = 0; i < anc.rows(); ++i) {
    bool has_pos = false, has_neg = false;
    MinedTriplet t{i, 0, 0, 0.0, 0.0, false};
    for (std::size_t j = 0; j < pool.rows(); ++j) {
      if (same_domain && i == j) continue;
      const double d = row_distance(anc, i, pool, j);
      if (pool_labels[j] == anc_labels[i]) {
        if (!has_pos || d > t.d_pos) {
          t.pos = j;
          t.d_pos = d;
          has_pos = true;
        }
      } else if (!has_neg || d < t.d_neg) {
        t.neg = j;
        t.d_neg = d;
        has_neg = true;
      }
    }
    if (!has_pos)
      fail_validation("triplet mining: class " +
                      std::to_string(anc_labels[i]) + " has no positive in " +
                      to_string(m2));
    if (!has_neg)
      fail_validation("triplet mining: class " +
                      std::to_string(anc_labels[i]) + " has no negative in " +
                      to_string(m2));
    t.active = t.d_pos - t.d_neg + margin > 0.0;
    out.push_back(t);
  }
  return out;
}

}  // namespace detail

/// One direction of the cross-domain hard-example triplet loss: anchors
/// from m1, hardest positive/negative drawn from m2. Mean over anchors of
/// ReLU(d_pos - d_neg + margin).
inline double triplet_term(Domain m1, Domain m2, const DomainBatch& batch,
                           double margin) {
  const auto mined = detail::mine_triplets(m1, m2, batch, margin);
  double acc = 0.0;
  for (const auto& t : mined)
    if (t.active) acc += t.d_pos - t.d_neg + margin;
  return acc / static_cast<double>(mined.size());
}

/// Sum of the within- and between-domain terms:
/// L(A,A) + L(B,B) + L(A,B) + L(B,A).
inline double cross_domain_triplet_loss(const DomainBatch& batch,
                                        double margin) {
  return triplet_term(Domain::A, Domain::A, batch, margin) +
         triplet_term(Domain::B, Domain::B, batch, margin) +
         triplet_term(Domain::A, Domain::B, batch, margin) +
         triplet_term(Domain::B, Domain::A, batch, margin);
}

struct TripletGradients {
  double loss = 0.0;
  Matrix grad_a, grad_b;
};

/// Analytic gradient of cross_domain_triplet_loss w.r.t. both embedding
/// matrices. Piecewise-smooth: valid away from hinge kinks and mining ties.
inline TripletGradients cross_domain_triplet_grad(const DomainBatch& batch,
                                                  double margin) {
  TripletGradients g;
  g.grad_a = Matrix(batch.embeddings_a.rows(), batch.embeddings_a.cols());
  g.grad_b = Matrix(batch.embeddings_b.rows(), batch.embeddings_b.cols());

  auto add_term = [&](Domain m1, Domain m2) {
    const Matrix& anc = batch.embeddings(m1);
    const Matrix& pool = batch.embeddings(m2);
    Matrix& anc_grad = m1 == Domain::A ? g.grad_a : g.grad_b;
    Matrix& pool_grad = m2 == Domain::A ? g.grad_a : g.grad_b;
    const auto mined = detail::mine_triplets(m1, m2, batch, margin);
    const double inv_n = 1.0 / static_cast<double>(mined.size());
    for (const auto& t : mined) {
      if (!t.active) continue;
      g.loss += (t.d_pos - t.d_neg + margin) * inv_n;
      for (std::size_t c = 0; c < anc.cols(); ++c) {
        const double up = (anc(t.anchor, c) - pool(t.pos, c)) / t.d_pos;
        const double un = (anc(t.anchor, c) - pool(t.neg, c)) / t.d_neg;
        anc_grad(t.anchor, c) += (up - un) * inv_n;
        pool_grad(t.pos, c) -= up * inv_n;
        pool_grad(t.neg, c) += un * inv_n;
      }
    }
  };
  add_term(Domain::A, Domain::A);
  add_term(Domain::B, Domain::B);
  add_term(Domain::A, Domain::B);
  add_term(Domain::B, Domain::A);
  return g;
}

enum class DistillKind { KlDivergence, MeanSquaredError };

/// Distillation distance between teacher and student feature rows.
/// Default form: rows are softened with a softmax at the given temperature
/// and compared with KL(teacher || student), averaged over rows; the
/// teacher is a constant target. MeanSquaredError compares raw rows.
inline double cad_loss(const Matrix& teacher, const Matrix& student,
                       double temperature,
                       DistillKind kind = DistillKind::KlDivergence) {
  if (!teacher.same_shape(student))
    fail_dimension("cad_loss: teacher " + std::to_string(teacher.rows()) + "x" +
                   std::to_string(teacher.cols()) + " vs student " +
                   std::to_string(student.rows()) + "x" +
                   std::to_string(student.cols()));
  if (temperature <= 0) fail_validation("cad_loss: temperature must be > 0");
  if (teacher.rows() == 0) fail_validation("cad_loss: empty feature matrix");

  if (kind == DistillKind::MeanSquaredError) {
    double acc = 0.0;
    for (std::size_t i = 0; i < teacher.data().size(); ++i) {
      const double d = teacher.data()[i] - student.data()[i];
      acc += d * d;
    }
    return acc / static_cast<double>(teacher.data().size());
  }

  auto log_softmax_row = [&](const Matrix& m, std::size_t i,
                             std::vector<double>& out) {
    double mx = m(i, 0) / temperature;
    for (std::size_t j = 1; j < m.cols(); ++j)
      mx = std::max(mx, m(i, j) / temperature);
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out[j] = m(i, j) / temperature - mx;
      sum += std::exp(out[j]);
    }
    const double lse = std::log(sum);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] -= lse;
  };

  std::vector<double> lp(teacher.cols()), lq(teacher.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < teacher.rows(); ++i) {
    log_softmax_row(teacher, i, lp);
    log_softmax_row(student, i, lq);
    for (std::size_t j = 0; j < teacher.cols(); ++j)
      acc += std::exp(lp[j]) * (lp[j] - lq[j]);
  }
  return acc / static_cast<double>(teacher.rows());
}

/// Mean over rows of -log softmax(logits)[label].
inline double cross_entropy_loss(const Matrix& logits,
                                 const std::vector<int>& labels) {
  if (logits.rows() != labels.size())
    fail_dimension("cross_entropy: logits rows vs labels");
  if (logits.rows() == 0) fail_validation("cross_entropy: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols())
      fail_validation("cross_entropy: label " + std::to_string(y) +
                      " out of range [0, " + std::to_string(logits.cols()) + ")");
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j)
      mx = std::max(mx, logits(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j)
      sum += std::exp(logits(i, j) - mx);
    acc += std::log(sum) + mx - logits(i, y);
  }
  return acc / static_cast<double>(logits.rows());
}

struct CrossEntropyGradients {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};

inline CrossEntropyGradients cross_entropy_grad(const Matrix& logits,
                                                const std::vector<int>& labels) {
  CrossEntropyGradients g;
  g.loss = cross_entropy_loss(logits, labels);
  g.grad = Matrix(logits.rows(), logits.cols());
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j)
      mx = std::max(mx, logits(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j)
      sum += std::exp(logits(i, j) - mx);
    for (std::size_t j = 0; j < logits.cols(); ++j)
      g.grad(i, j) = std::exp(logits(i, j) - mx) / sum * inv_n;
    g.grad(i, labels[i]) -= inv_n;
  }
  return g;
}

/// Image-level attention features paired for distillation: the teacher
/// sees cross-domain pairs, the student only single images. One row per
/// image, mean-pooled over tokens (see mean_pool).
struct CadFeatures {
  Matrix teacher_ba, student_aa;  // distill F(B,A) -> F(A,A)
  Matrix teacher_ab, student_bb;  // distill F(A,B) -> F(B,B)
};

struct LossBreakdown {
  double triplet = 0.0;
  double cad = 0.0;
  double ce = 0.0;
  double total = 0.0;
};

/// Weighted sum of the three training losses. Terms with zero weight are
/// skipped entirely; a non-zero weight whose inputs are missing is an error.
inline LossBreakdown total_loss(const DomainBatch& batch,
                                const std::optional<CadFeatures>& cad,
                                const LossWeights& weights,
                                DistillKind kind = DistillKind::KlDivergence) {
  weights.validate();
  batch.validate();
  LossBreakdown out;
  if (weights.lambda_triplet > 0)
    out.triplet = cross_domain_triplet_loss(batch, weights.margin);
  if (weights.lambda_cad > 0) {
    if (!cad) fail_validation("total_loss: lambda_cad > 0 but no attention features");
    out.cad = cad_loss(cad->teacher_ba, cad->student_aa, weights.temperature, kind) +
              cad_loss(cad->teacher_ab, cad->student_bb, weights.temperature, kind);
  }
  if (weights.lambda_ce > 0) {
    if (!batch.logits_a || !batch.logits_b)
      fail_validation("total_loss: lambda_ce > 0 but batch has no logits");
    out.ce = cross_entropy_loss(*batch.logits_a, batch.labels_a) +
             cross_entropy_loss(*batch.logits_b, batch.labels_b);
  }
  out.total = weights.lambda_triplet * out.triplet +
              weights.lambda_cad * out.cad + weights.lambda_ce * out.ce;
  return out;
}

}  // namespace crossrank
