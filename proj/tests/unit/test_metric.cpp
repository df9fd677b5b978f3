#include "dpgnn/error.hpp"
#include "dpgnn/metric.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace dpgnn;
using dpgnn::testing::gradient_check;
using dpgnn::testing::random_matrix;

namespace {

Matrix dense_softmax(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    RowVector e = (x.row(i).array() - x.row(i).maxCoeff()).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

}  // namespace

TEST_SUITE("metric") {

TEST_CASE("embedding a prototype against itself is zero") {
  ad::Tape tape;
  Matrix p(1, 3);
  p << 0.3, -1.0, 2.0;
  ad::Tensor g = metric_embed(tape.constant(p), tape.constant(p), tape.constant(Matrix::Identity(3, 3)),
                              tape.constant(Matrix::Zero(1, 3)));
  CHECK(g.value().isZero());
}

TEST_CASE("hand concatenation with identity weights") {
  ad::Tape tape;
  Matrix h(1, 2), protos(2, 2);
  h << 1.0, 1.0;
  protos << 0.0, 1.0,   // h - p1 = [1, 0]
      1.0, 0.0;         // h - p2 = [0, 1]
  ad::Tensor g = metric_embed(tape.constant(h), tape.constant(protos),
                              tape.constant(Matrix::Identity(4, 4)), tape.constant(Matrix::Zero(1, 4)));
  Matrix expect(1, 4);
  expect << 1, 0, 0, 1;
  CHECK(g.value() == expect);
  CHECK_THROWS_AS(metric_embed(tape.constant(h), tape.constant(protos),
                               tape.constant(Matrix::Identity(3, 3)), tape.constant(Matrix::Zero(1, 3))),
                  ShapeError);
}

TEST_CASE("factored embedding equals the literal one and both pass FD") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(seed);
    const Index d = 4, c = 3, m = 5;
    Matrix h = random_matrix(6, d, rng);
    Matrix p = random_matrix(c, d, rng);
    Matrix w = random_matrix(c * d, m, rng);
    Matrix b = random_matrix(1, m, rng);
    ad::Tape tape;
    Matrix lit = metric_embed(tape.constant(h), tape.constant(p), tape.constant(w), tape.constant(b)).value();
    Matrix fac = metric_embed_factored(tape.constant(h), tape.constant(p), tape.constant(w), tape.constant(b)).value();
    CHECK((lit - fac).cwiseAbs().maxCoeff() < 1e-12);

    Matrix probe = random_matrix(6, m, rng);
    auto weigh = [&](const ad::Tensor& g) {
      ad::Tape& t = *g.tape();
      ad::Tensor pr = t.constant(probe);
      return ad::sum_all(t.record("dot", g.value().cwiseProduct(probe), {g, pr},
                                  [g, &probe](const Matrix& up, ad::GradSink& sink) {
                                    sink.add(g, Matrix(up(0, 0) * probe));
                                  }));
    };
    CHECK(gradient_check({h, p, w, b}, [&](ad::Tape&, const auto& v) {
            return weigh(metric_embed(v[0], v[1], v[2], v[3]));
          }) < 1e-4);
    CHECK(gradient_check({h, p, w, b}, [&](ad::Tape&, const auto& v) {
            return weigh(metric_embed_factored(v[0], v[1], v[2], v[3]));
          }) < 1e-4);
  }
}

TEST_CASE("translation leaves metric representations unchanged") {
  std::mt19937_64 rng(3);
  Matrix h = random_matrix(5, 3, rng);
  Matrix p = random_matrix(2, 3, rng);
  Matrix w = random_matrix(6, 4, rng);
  Matrix b = random_matrix(1, 4, rng);
  RowVector delta = random_matrix(1, 3, rng);
  Matrix hs = h.rowwise() + delta;
  Matrix ps = p.rowwise() + delta;
  ad::Tape tape;
  Matrix g1 = metric_embed(tape.constant(h), tape.constant(p), tape.constant(w), tape.constant(b)).value();
  Matrix g2 = metric_embed(tape.constant(hs), tape.constant(ps), tape.constant(w), tape.constant(b)).value();
  CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-12);

  DistanceMetricLayer layer;
  layer.weight.value = w;
  layer.bias.value = b;
  CHECK(predict_nodes(h, p, layer) == predict_nodes(hs, ps, layer));
}

TEST_CASE("classify_queries") {
  ad::Tape tape;
  Matrix s = 50.0 * Matrix::Identity(3, 3);
  Matrix f = classify_queries(tape.constant(s), tape.constant(s)).value();
  CHECK((f - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  Matrix zero_row = Matrix::Zero(1, 3);
  Matrix fz = classify_queries(tape.constant(zero_row), tape.constant(s)).value();
  for (Index j = 0; j < 3; ++j) CHECK(fz(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  std::mt19937_64 rng(4);
  Matrix gq = random_matrix(3, 5, rng), gs = random_matrix(3, 5, rng);
  Matrix fr = classify_queries(tape.constant(gq), tape.constant(gs)).value();
  CHECK((fr - dense_softmax(gq * gs.transpose())).cwiseAbs().maxCoeff() < 1e-12);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(fr.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("classification loss closed forms") {
  ad::Tape tape;
  CHECK(classification_loss(tape.constant(Matrix::Identity(3, 3))).scalar() == 0.0);
  CHECK(classification_loss(tape.constant(Matrix::Constant(4, 4, 0.25))).scalar() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(classification_loss_from_logits(tape.constant(Matrix::Zero(4, 4))).scalar() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));

  std::mt19937_64 rng(5);
  Matrix logits = random_matrix(3, 3, rng);
  Matrix f = dense_softmax(logits);
  const double oracle = -(std::log(f(0, 0)) + std::log(f(1, 1)) + std::log(f(2, 2))) / 3.0;
  CHECK(std::abs(classification_loss(tape.constant(f)).scalar() - oracle) < 1e-12);
  CHECK(std::abs(classification_loss_from_logits(tape.constant(logits)).scalar() - oracle) < 1e-12);
  CHECK(classification_loss_from_logits(tape.constant(logits)).scalar() >= 0.0);

  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = 0.0;
  CHECK_THROWS_AS(classification_loss(tape.constant(bad)), NumericError);

  CHECK(gradient_check({logits}, [](ad::Tape&, const auto& v) {
          return classification_loss_from_logits(v[0]);
        }) < 1e-4);
  CHECK(gradient_check({logits}, [](ad::Tape&, const auto& v) {
          return classification_loss(ad::softmax_rows(v[0]));
        }) < 1e-4);
}

TEST_CASE("argmax picks exact matches, breaks ties low and ignores monotone maps") {
  // unit-norm metric rows; node 0 equals G_S row 2 and is orthogonal to the rest
  Matrix gs = Matrix::Identity(3, 3);
  Matrix node(1, 3);
  node << 0, 0, 1;
  CHECK(argmax_rows(node * gs.transpose()) == std::vector<int>{2});
  CHECK(argmax_rows(Matrix::Zero(2, 3)) == std::vector<int>{0, 0});

  std::mt19937_64 rng(6);
  Matrix scores = random_matrix(10, 4, rng);
  Matrix mapped = (scores.array() * 3.0 + 1.0).exp().matrix();
  CHECK(argmax_rows(scores) == argmax_rows(mapped));
  CHECK(argmax_rows(scores) == argmax_rows(dense_softmax(scores)));

  DistanceMetricLayer zero;
  zero.weight.value = Matrix::Zero(6, 4);
  zero.bias.value = Matrix::Zero(1, 4);
  CHECK(predict_nodes(random_matrix(5, 3, rng), random_matrix(2, 3, rng), zero) ==
        std::vector<int>(5, 0));
}

TEST_CASE("difference embedding and predictions without the learned map") {
  std::mt19937_64 rng(7);
  Matrix h = random_matrix(4, 3, rng);
  Matrix p = random_matrix(2, 3, rng);
  ad::Tape tape;
  Matrix d = difference_embed(tape.constant(h), tape.constant(p)).value();
  CHECK(d.cols() == 6);
  CHECK((d.block(0, 0, 4, 3) - (h.rowwise() - RowVector(p.row(0)))).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((d.block(0, 3, 4, 3) - (h.rowwise() - RowVector(p.row(1)))).cwiseAbs().maxCoeff() < 1e-15);

  Matrix gs = difference_embed(tape.constant(p), tape.constant(p)).value();
  CHECK(predict_nodes(h, p) == argmax_rows(d * gs.transpose()));
}

}  // TEST_SUITE
