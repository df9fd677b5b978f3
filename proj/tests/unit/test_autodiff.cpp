#include "dpgnn/autodiff.hpp"
#include "dpgnn/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace dpgnn;
using namespace dpgnn::ad;
using dpgnn::testing::gradient_check;
using dpgnn::testing::random_matrix;

namespace {

// Contracts any tensor to a scalar with fixed random weights so every output
// entry gets a distinct upstream gradient.
Tensor readout(const Tensor& x, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Tape& tape = *x.tape();
  Tensor w = tape.constant(random_matrix(x.rows(), x.cols(), rng));
  Tensor prod = tape.record("test_mul", x.value().cwiseProduct(w.value()), {x, w},
                            [x, w](const Matrix& up, GradSink& sink) {
                              sink.add(x, Matrix(up(0, 0) * w.value()));
                            });
  return sum_all(prod);
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (auto r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("relu forward and backward") {
  Tape tape;
  Tensor x = tape.variable(mat({{-1, 2}}));
  Tensor y = relu(x);
  CHECK(y.value() == mat({{0, 2}}));
  Gradients g = tape.backward(sum_all(y));
  CHECK(g.at(x) == mat({{0, 1}}));
}

TEST_CASE("matmul with identity") {
  Tape tape;
  std::mt19937_64 rng(1);
  Matrix b = random_matrix(2, 5, rng);
  CHECK(matmul(tape.constant(Matrix::Identity(2, 2)), tape.constant(b)).value() == b);
  CHECK_THROWS_AS(matmul(tape.constant(Matrix::Zero(2, 3)), tape.constant(b)), ShapeError);
}

TEST_CASE("cosine similarity of orthonormal rows") {
  Tape tape;
  Tensor c = cosine_sim_matrix(tape.constant(mat({{1, 0}, {0, 1}})));
  CHECK((c.value() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(cosine_sim_matrix(tape.constant(mat({{1, 0}, {0, 0}}))), NumericError);
}

TEST_CASE("cross entropy of a uniform softmax is ln 2") {
  Tape tape;
  std::vector<int> t{0};
  Tensor logits = tape.constant(mat({{0, 0}}));
  CHECK(cross_entropy_rows(softmax_rows(logits), t).scalar() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softmax_cross_entropy(logits, t).scalar() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("sum and half squared norm gradients") {
  Tape tape;
  std::mt19937_64 rng(2);
  Matrix v = random_matrix(2, 2, rng);
  Tensor x = tape.variable(v);
  Gradients g = tape.backward(sum_all(x));
  CHECK(g.at(x) == Matrix::Ones(2, 2));

  Tape t2;
  Tensor y = t2.variable(v);
  std::pair<Tensor, double> half{squared_norm(y), 0.5};
  Gradients g2 = t2.backward(scalar_combine(std::span(&half, 1)));
  CHECK((g2.at(y) - v).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("backward rejects non-scalar losses and foreign tensors") {
  Tape tape, other;
  Tensor x = tape.variable(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
  Tensor y = other.variable(Matrix::Ones(1, 1));
  CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("fan-out accumulates and every closure runs once") {
  Tape tape;
  Tensor x = tape.variable(mat({{1, 2}, {3, 4}}));
  Tensor a = sum_all(x);
  Tensor b = sum_all(x);
  std::vector<std::pair<Tensor, double>> terms{{a, 1.0}, {b, 2.0}};
  Gradients g = tape.backward(scalar_combine(terms));
  CHECK(g.at(x) == Matrix::Constant(2, 2, 3.0));
  CHECK(tape.last_backward_visits() == 3);
}

TEST_CASE("dropout identities and inverted scaling") {
  std::mt19937_64 rng(3);
  Tape tape;
  Matrix v = random_matrix(6, 7, rng);
  Tensor x = tape.variable(v);
  CHECK(dropout(x, 0.5, false, rng).value() == v);
  CHECK(dropout(x, 0.0, true, rng).value() == v);
  Tensor d = dropout(x, 0.25, true, rng);
  for (Index i = 0; i < v.size(); ++i) {
    const double out = d.value().data()[i];
    CHECK((out == 0.0 || std::abs(out - v.data()[i] / 0.75) < 1e-15));
  }
}

TEST_CASE("softmax rows are positive and sum to one") {
  std::mt19937_64 rng(4);
  Tape tape;
  Tensor s = softmax_rows(tape.constant(random_matrix(5, 4, rng, 10.0)));
  for (Index i = 0; i < 5; ++i) {
    CHECK(std::abs(s.value().row(i).sum() - 1.0) < 1e-12);
    CHECK(s.value().row(i).minCoeff() > 0.0);
  }
}

TEST_CASE("spmm_const backward equals the dense transpose product") {
  std::mt19937_64 rng(5);
  const std::size_t n = 12;
  SparseGraph g = build_graph(dpgnn::testing::random_edges(n, 0.3, rng), n);
  NormalizedAdjacency adj = normalize(g);
  Tape tape;
  Tensor x = tape.variable(random_matrix(12, 3, rng));
  Matrix up = random_matrix(12, 3, rng);
  Tensor y = spmm_const(adj, x);
  Tensor w = tape.constant(up);
  Tensor prod = tape.record("dot", y.value().cwiseProduct(up), {y, w},
                            [y, up](const Matrix& u, GradSink& sink) {
                              sink.add(y, Matrix(u(0, 0) * up));
                            });
  Gradients gr = tape.backward(sum_all(prod));
  Matrix dense = dpgnn::testing::dense_normalized(g);
  CHECK((gr.at(x) - dense.transpose() * up).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("finite differences for every operation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(seed);
    const Index r = 2 + static_cast<Index>(rng() % 7);
    const Index k = 2 + static_cast<Index>(rng() % 7);
    const Index c = 2 + static_cast<Index>(rng() % 7);
    Matrix a = random_matrix(r, k, rng);
    Matrix b = random_matrix(k, c, rng);
    Matrix b2 = random_matrix(c, k, rng);
    Matrix row = random_matrix(1, k, rng);
    Matrix same = random_matrix(r, k, rng);

    const std::size_t n = static_cast<std::size_t>(r);
    SparseGraph graph = build_graph(dpgnn::testing::random_edges(n, 0.4, rng), n);
    NormalizedAdjacency adj = normalize(graph);
    CsrMatrix sparse_x = CsrMatrix::from_dense(random_matrix(r, k, rng), 0.5);

    std::vector<int> targets;
    std::vector<double> weights;
    for (Index i = 0; i < r; ++i) {
      targets.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(k)));
      weights.push_back(0.5 + static_cast<double>(i));
    }
    std::vector<std::size_t> rows{0, static_cast<std::size_t>(r - 1), 0};

    const double tol = 1e-4;
    CHECK(gradient_check({a, b}, [](Tape&, const auto& v) { return readout(matmul(v[0], v[1])); }) < tol);
    CHECK(gradient_check({a, b2}, [](Tape&, const auto& v) { return readout(matmul_nt(v[0], v[1])); }) < tol);
    CHECK(gradient_check({a}, [&](Tape&, const auto& v) { return readout(spmm_const(adj, v[0])); }) < tol);
    CHECK(gradient_check({b}, [&](Tape&, const auto& v) {
            return readout(sparse_matmul_const(sparse_x, v[0]));
          }) < tol);
    CHECK(gradient_check({a, row}, [](Tape&, const auto& v) { return readout(add_bias(v[0], v[1])); }) < tol);
    CHECK(gradient_check({a}, [](Tape&, const auto& v) { return readout(relu(v[0])); }) < tol);
    CHECK(gradient_check({a}, [&](Tape&, const auto& v) {
            std::mt19937_64 fixed(seed);  // same mask for every evaluation
            return readout(dropout(v[0], 0.3, true, fixed));
          }) < tol);
    CHECK(gradient_check({a, row}, [](Tape&, const auto& v) { return readout(row_sub(v[0], v[1])); }) < tol);
    CHECK(gradient_check({a, same}, [](Tape&, const auto& v) { return readout(sub(v[0], v[1])); }) < tol);
    CHECK(gradient_check({a, same}, [](Tape&, const auto& v) {
            std::vector<Tensor> parts{v[0], v[1], v[0]};
            return readout(concat_cols(parts));
          }) < tol);
    CHECK(gradient_check({a, row}, [](Tape&, const auto& v) {
            std::vector<Tensor> parts{v[0], v[1]};
            return readout(concat_rows(parts));
          }) < tol);
    CHECK(gradient_check({a}, [&](Tape&, const auto& v) { return readout(gather_rows(v[0], rows)); }) < tol);
    CHECK(gradient_check({a}, [](Tape&, const auto& v) { return readout(mean_rows(v[0])); }) < tol);
    Matrix blocks = random_matrix(3 * k, c, rng);
    CHECK(gradient_check({blocks}, [](Tape&, const auto& v) { return readout(block_row_sum(v[0], 3)); }) < tol);
    CHECK(gradient_check({a}, [](Tape&, const auto& v) { return readout(flatten_rows(v[0])); }) < tol);
    CHECK(gradient_check({a}, [](Tape&, const auto& v) { return readout(softmax_rows(v[0])); }) < tol);
    CHECK(gradient_check({a}, [&](Tape&, const auto& v) {
            return cross_entropy_rows(softmax_rows(v[0]), targets, weights);
          }) < tol);
    CHECK(gradient_check({a}, [&](Tape&, const auto& v) {
            return softmax_cross_entropy(v[0], targets, weights);
          }) < tol);
    CHECK(gradient_check({a}, [](Tape&, const auto& v) { return readout(cosine_sim_matrix(v[0])); }) < tol);
    Matrix sq = random_matrix(k, k, rng);
    CHECK(gradient_check({sq}, [](Tape&, const auto& v) { return off_diagonal_sum(v[0]); }) < tol);
    CHECK(gradient_check({a}, [](Tape&, const auto& v) { return squared_norm(v[0]); }) < tol);
    CHECK(gradient_check({a, same}, [](Tape&, const auto& v) {
            std::vector<std::pair<Tensor, double>> t{{sum_all(relu(v[0])), 0.7},
                                                     {squared_norm(v[1]), -1.3}};
            return scalar_combine(t);
          }) < tol);
  }
}

TEST_CASE("shape errors name the operation") {
  Tape tape;
  Tensor a = tape.constant(Matrix::Zero(2, 3));
  Tensor b = tape.constant(Matrix::Zero(1, 2));
  try {
    add_bias(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(e.op() == "add_bias");
  }
  CHECK_THROWS_AS(row_sub(a, b), ShapeError);
  CHECK_THROWS_AS(sub(a, b), ShapeError);
}

}  // TEST_SUITE
