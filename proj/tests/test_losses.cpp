#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crossrank/losses.hpp"
#include "support/oracles.hpp"

using namespace crossrank;

namespace {

Matrix rows_matrix(const std::vector<std::vector<double>>& rows) {
  return Matrix::from_rows(rows);
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    rows[i].assign(m.row(i).begin(), m.row(i).end());
  return rows;
}

DomainBatch random_batch(oracle::TestRng& rng, int per_class, int n_classes,
                         int dim) {
  DomainBatch b;
  const int n = per_class * n_classes;
  b.embeddings_a = Matrix(n, dim);
  b.embeddings_b = Matrix(n, dim);
  for (int c = 0; c < n_classes; ++c) {
    const auto center_a = rng.gaussian_vector(dim);
    const auto center_b = rng.gaussian_vector(dim);
    for (int k = 0; k < per_class; ++k) {
      const int row = c * per_class + k;
      for (int d = 0; d < dim; ++d) {
        b.embeddings_a(row, d) = center_a[d] + 0.4 * rng.gaussian();
        b.embeddings_b(row, d) = center_b[d] + 0.4 * rng.gaussian();
      }
      b.labels_a.push_back(c);
      b.labels_b.push_back(c);
    }
  }
  return b;
}

double oracle_term(Domain m1, Domain m2, const DomainBatch& b, double margin) {
  const auto& anc = m1 == Domain::A ? b.embeddings_a : b.embeddings_b;
  const auto& anc_l = m1 == Domain::A ? b.labels_a : b.labels_b;
  const auto& pool = m2 == Domain::A ? b.embeddings_a : b.embeddings_b;
  const auto& pool_l = m2 == Domain::A ? b.labels_a : b.labels_b;
  return oracle::naive_triplet_term(to_rows(anc), anc_l, to_rows(pool), pool_l,
                                    m1 == m2, margin);
}

}  // namespace

TEST_CASE("triplet_term hinge arithmetic") {
  // two classes, one point each per domain: distances are explicit
  DomainBatch b;
  b.embeddings_a = rows_matrix({{0.0}, {1.0}});
  b.embeddings_b = rows_matrix({{0.5}, {1.0}});
  b.labels_a = {0, 1};
  b.labels_b = {0, 1};
  // anchor a0: pos b0 at 0.5, neg b1 at 1.0 -> ReLU(0.5-1.0+eps)
  // anchor a1: pos b1 at 0.0, neg b0 at 0.5 -> ReLU(0.0-0.5+eps)
  SECTION("margin satisfied gives zero") {
    CHECK(triplet_term(Domain::A, Domain::B, b, 0.3) ==
          Catch::Approx((0.0 + 0.0) / 2.0));
  }
  SECTION("violations accumulate the hinge") {
    CHECK(triplet_term(Domain::A, Domain::B, b, 0.8) ==
          Catch::Approx((0.3 + 0.3) / 2.0));
  }
}

TEST_CASE("triplet hinge values for a single anchor") {
  // d_pos = 1.0, d_neg = 0.5, eps = 0.3 -> 0.8; swapped -> 0
  DomainBatch b;
  b.embeddings_a = rows_matrix({{0.0}});
  b.embeddings_b = rows_matrix({{1.0}, {0.5}});
  b.labels_a = {0};
  b.labels_b = {0, 1};
  CHECK(triplet_term(Domain::A, Domain::B, b, 0.3) == Catch::Approx(0.8));

  DomainBatch c;
  c.embeddings_a = rows_matrix({{0.0}});
  c.embeddings_b = rows_matrix({{0.5}, {1.0}});
  c.labels_a = {0};
  c.labels_b = {0, 1};
  CHECK(triplet_term(Domain::A, Domain::B, c, 0.3) == 0.0);
}

TEST_CASE("triplet_term requires positives and negatives") {
  DomainBatch b;
  b.embeddings_a = rows_matrix({{0.0}, {1.0}});
  b.embeddings_b = rows_matrix({{0.5}, {1.0}});
  b.labels_a = {0, 1};
  b.labels_b = {0, 0};
  // anchor a0 (class 0) fails first: every pool item shares its class
  CHECK_THROWS_MATCHES(triplet_term(Domain::A, Domain::B, b, 0.3), Error,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                           "class 0 has no negative")));
  // within-domain: a singleton class has no positive once self is excluded
  DomainBatch c;
  c.embeddings_a = rows_matrix({{0.0}, {1.0}});
  c.embeddings_b = rows_matrix({{0.0}, {1.0}});
  c.labels_a = {0, 1};
  c.labels_b = {0, 1};
  CHECK_THROWS_MATCHES(triplet_term(Domain::A, Domain::A, c, 0.3), Error,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                           "no positive")));
}

TEST_CASE("triplet losses match exhaustive enumeration") {
  oracle::TestRng rng(101);
  const auto batch = random_batch(rng, 4, 2, 3);
  const double eps = 0.3;
  for (auto [m1, m2] : {std::pair{Domain::A, Domain::A},
                        std::pair{Domain::B, Domain::B},
                        std::pair{Domain::A, Domain::B},
                        std::pair{Domain::B, Domain::A}})
    CHECK(triplet_term(m1, m2, batch, eps) ==
          Catch::Approx(oracle_term(m1, m2, batch, eps)).margin(1e-12));

  SECTION("the cross-domain loss is exactly the sum of its four terms") {
    const double sum = triplet_term(Domain::A, Domain::A, batch, eps) +
                       triplet_term(Domain::B, Domain::B, batch, eps) +
                       triplet_term(Domain::A, Domain::B, batch, eps) +
                       triplet_term(Domain::B, Domain::A, batch, eps);
    CHECK(cross_domain_triplet_loss(batch, eps) == sum);
  }
}

TEST_CASE("symmetric batch makes the cross terms equal") {
  oracle::TestRng rng(7);
  auto batch = random_batch(rng, 3, 2, 4);
  batch.embeddings_b = batch.embeddings_a;
  batch.labels_b = batch.labels_a;
  CHECK(triplet_term(Domain::A, Domain::B, batch, 0.3) ==
        Catch::Approx(triplet_term(Domain::B, Domain::A, batch, 0.3)));
}

TEST_CASE("well-separated clusters satisfy every margin") {
  DomainBatch b;
  b.embeddings_a = rows_matrix({{0.0, 0.0}, {0.1, 0.0}, {10.0, 0.0}, {10.1, 0.0}});
  b.embeddings_b = rows_matrix({{0.0, 0.2}, {0.1, 0.2}, {10.0, 0.2}, {10.1, 0.2}});
  b.labels_a = {0, 0, 1, 1};
  b.labels_b = {0, 0, 1, 1};
  CHECK(cross_domain_triplet_loss(b, 0.3) == 0.0);
}

TEST_CASE("triplet loss is invariant under a common rotation") {
  oracle::TestRng rng(311);
  const int dim = 4;
  auto batch = random_batch(rng, 3, 2, dim);
  const double before = cross_domain_triplet_loss(batch, 0.3);

  // random orthogonal matrix via Gram-Schmidt on gaussian columns
  std::vector<std::vector<double>> q;
  for (int i = 0; i < dim; ++i) {
    auto v = rng.gaussian_vector(dim);
    for (const auto& u : q) {
      double dot = 0.0;
      for (int k = 0; k < dim; ++k) dot += v[k] * u[k];
      for (int k = 0; k < dim; ++k) v[k] -= dot * u[k];
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    q.push_back(v);
  }
  auto rotate = [&](Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) out(i, j) += q[j][k] * m(i, k);
    m = out;
  };
  rotate(batch.embeddings_a);
  rotate(batch.embeddings_b);
  CHECK(cross_domain_triplet_loss(batch, 0.3) ==
        Catch::Approx(before).margin(1e-6));
}

TEST_CASE("cad_loss") {
  oracle::TestRng rng(41);
  SECTION("identical teacher and student give exactly zero") {
    const auto x = rows_matrix({{0.3, -1.2, 0.8}, {2.0, 0.1, -0.4}});
    CHECK(cad_loss(x, x, 1.0) == 0.0);
  }
  SECTION("divergence is strictly positive for differing rows") {
    const auto teacher = rows_matrix({{4.0, 0.0}});
    const auto student = rows_matrix({{0.0, 0.0}});
    CHECK(cad_loss(teacher, student, 1.0) > 0.0);
  }
  SECTION("matches the direct p*log(p/q) sum") {
    Matrix teacher(2, 3), student(2, 3);
    for (auto& v : teacher.data()) v = rng.gaussian();
    for (auto& v : student.data()) v = rng.gaussian();
    for (double t : {0.5, 1.0, 3.0})
      CHECK(cad_loss(teacher, student, t) ==
            Catch::Approx(oracle::naive_kl_rows(to_rows(teacher),
                                                to_rows(student), t))
                .margin(1e-8));
  }
  SECTION("shape and temperature validation") {
    CHECK_THROWS_AS(cad_loss(Matrix(2, 3), Matrix(3, 2), 1.0), Error);
    CHECK_THROWS_AS(cad_loss(Matrix(2, 3), Matrix(2, 3), 0.0), Error);
  }
  SECTION("mean-squared alternative") {
    const auto teacher = rows_matrix({{1.0, 3.0}});
    const auto student = rows_matrix({{0.0, 1.0}});
    CHECK(cad_loss(teacher, student, 1.0, DistillKind::MeanSquaredError) ==
          Catch::Approx((1.0 + 4.0) / 2.0));
  }
}

TEST_CASE("cross_entropy_loss") {
  SECTION("uniform logits give ln C") {
    const auto logits = rows_matrix({{0.2, 0.2, 0.2, 0.2, 0.2}});
    CHECK(cross_entropy_loss(logits, {3}) ==
          Catch::Approx(std::log(5.0)).margin(1e-9));
  }
  SECTION("a dominant correct logit drives the loss to zero") {
    const auto logits = rows_matrix({{50.0, 0.0, 0.0}});
    CHECK(cross_entropy_loss(logits, {0}) < 1e-9);
  }
  SECTION("matches the naive per-row formula") {
    oracle::TestRng rng(59);
    Matrix logits(4, 5);
    for (auto& v : logits.data()) v = rng.gaussian();
    const std::vector<int> labels{1, 0, 4, 2};
    CHECK(cross_entropy_loss(logits, labels) ==
          Catch::Approx(oracle::naive_cross_entropy(to_rows(logits), labels))
              .margin(1e-8));
  }
  SECTION("label out of range rejected") {
    CHECK_THROWS_AS(cross_entropy_loss(rows_matrix({{0.0, 1.0}}), {2}), Error);
  }
}

TEST_CASE("total_loss composition") {
  oracle::TestRng rng(61);
  auto batch = random_batch(rng, 3, 2, 3);
  Matrix logits_a(6, 2), logits_b(6, 2);
  for (auto& v : logits_a.data()) v = rng.gaussian();
  for (auto& v : logits_b.data()) v = rng.gaussian();
  batch.logits_a = logits_a;
  batch.logits_b = logits_b;
  CadFeatures cad;
  cad.teacher_ba = Matrix(6, 4);
  cad.student_aa = Matrix(6, 4);
  cad.teacher_ab = Matrix(6, 4);
  cad.student_bb = Matrix(6, 4);
  for (Matrix* m : {&cad.teacher_ba, &cad.student_aa, &cad.teacher_ab,
                    &cad.student_bb})
    for (auto& v : m->data()) v = rng.gaussian();

  SECTION("all weights zero gives zero") {
    LossWeights w;
    w.lambda_triplet = w.lambda_cad = w.lambda_ce = 0.0;
    const auto out = total_loss(batch, cad, w);
    CHECK(out.total == 0.0);
  }
  SECTION("triplet-only equals the triplet loss") {
    LossWeights w;
    w.lambda_cad = w.lambda_ce = 0.0;
    const auto out = total_loss(batch, cad, w);
    CHECK(out.total == cross_domain_triplet_loss(batch, w.margin));
  }
  SECTION("weighted sum of independently computed terms") {
    LossWeights w;
    w.lambda_triplet = 0.5;
    w.lambda_cad = 2.0;
    w.lambda_ce = 1.5;
    const auto out = total_loss(batch, cad, w);
    const double triplet = cross_domain_triplet_loss(batch, w.margin);
    const double cadv =
        cad_loss(cad.teacher_ba, cad.student_aa, w.temperature) +
        cad_loss(cad.teacher_ab, cad.student_bb, w.temperature);
    const double ce = cross_entropy_loss(*batch.logits_a, batch.labels_a) +
                      cross_entropy_loss(*batch.logits_b, batch.labels_b);
    CHECK(out.total ==
          Catch::Approx(0.5 * triplet + 2.0 * cadv + 1.5 * ce).margin(1e-12));
    CHECK(out.triplet == triplet);
    CHECK(out.cad == cadv);
    CHECK(out.ce == ce);
  }
  SECTION("linear in each weight") {
    LossWeights w;
    const auto base = total_loss(batch, cad, w);
    LossWeights w2 = w;
    w2.lambda_cad = 2.0;
    const auto doubled = total_loss(batch, cad, w2);
    CHECK(doubled.total - base.total == Catch::Approx(base.cad).margin(1e-12));
  }
  SECTION("missing inputs with a positive weight are an error") {
    LossWeights w;
    CHECK_THROWS_AS(total_loss(batch, std::nullopt, w), Error);
    auto no_logits = batch;
    no_logits.logits_a.reset();
    CHECK_THROWS_AS(total_loss(no_logits, cad, w), Error);
  }
}

TEST_CASE("analytic gradients match finite differences") {
  oracle::TestRng rng(73);

  SECTION("triplet gradients w.r.t. both embedding matrices") {
    const double eps = 0.3;
    for (int accepted = 0; accepted < 3;) {
      const auto batch = random_batch(rng, 3, 2, 3);
      // keep only test points safely away from hinge and mining kinks
      if (!oracle::triplet_kink_free(to_rows(batch.embeddings_a),
                                     batch.labels_a,
                                     to_rows(batch.embeddings_b),
                                     batch.labels_b, eps, 5e-3))
        continue;
      ++accepted;
      const auto g = cross_domain_triplet_grad(batch, eps);
      CHECK(g.loss ==
            Catch::Approx(cross_domain_triplet_loss(batch, eps)).margin(1e-12));

      const std::size_t na = batch.embeddings_a.data().size();
      std::vector<double> x(batch.embeddings_a.data());
      x.insert(x.end(), batch.embeddings_b.data().begin(),
               batch.embeddings_b.data().end());
      std::vector<double> analytic(g.grad_a.data());
      analytic.insert(analytic.end(), g.grad_b.data().begin(),
                      g.grad_b.data().end());

      auto f = [&](const std::vector<double>& v) {
        DomainBatch b = batch;
        std::copy(v.begin(), v.begin() + na, b.embeddings_a.data().begin());
        std::copy(v.begin() + na, v.end(), b.embeddings_b.data().begin());
        return cross_domain_triplet_loss(b, eps);
      };
      CHECK(oracle::max_grad_rel_error(f, x, analytic) < 1e-4);
    }
  }

  SECTION("cross-entropy gradients w.r.t. logits") {
    for (int trial = 0; trial < 3; ++trial) {
      Matrix logits(4, 5);
      for (auto& v : logits.data()) v = rng.gaussian();
      const std::vector<int> labels{1, 4, 0, 2};
      const auto g = cross_entropy_grad(logits, labels);
      auto f = [&](const std::vector<double>& v) {
        Matrix m(4, 5);
        m.data() = v;
        return cross_entropy_loss(m, labels);
      };
      CHECK(oracle::max_grad_rel_error(f, logits.data(), g.grad.data()) < 1e-4);
    }
  }
}
