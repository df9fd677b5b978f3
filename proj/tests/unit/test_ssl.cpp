#include "dpgnn/error.hpp"
#include "dpgnn/ssl.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace dpgnn;
using dpgnn::testing::random_matrix;

TEST_SUITE("ssl") {

TEST_CASE("prototype separation closed forms") {
  ad::Tape tape;
  Matrix orth(2, 3);
  orth << 1, 0, 0, 0, 2, 0;
  CHECK(std::abs(proto_separation_loss(tape.constant(orth)).scalar()) < 1e-15);
  Matrix same(2, 2);
  same << 1, 2, 1, 2;
  CHECK(proto_separation_loss(tape.constant(same)).scalar() == doctest::Approx(2.0).epsilon(1e-14));
  Matrix anti(2, 2);
  anti << 1, 2, -1, -2;
  CHECK(proto_separation_loss(tape.constant(anti)).scalar() == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK_THROWS_AS(proto_separation_loss(tape.constant(Matrix::Zero(2, 2))), NumericError);
}

TEST_CASE("prototype separation is scale invariant per row and passes FD") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    Matrix p = random_matrix(4, 5, rng);
    Matrix scaled = p;
    scaled.row(0) *= 3.0;
    scaled.row(2) *= 0.2;
    ad::Tape tape;
    CHECK(std::abs(proto_separation_loss(tape.constant(p)).scalar() -
                   proto_separation_loss(tape.constant(scaled)).scalar()) < 1e-12);
    CHECK(dpgnn::testing::gradient_check({p}, [](ad::Tape&, const auto& v) {
            return proto_separation_loss(v[0]);
          }) < 1e-4);
  }
}

TEST_CASE("smoothing closed forms") {
  std::vector<Edge> one{{0, 1}};
  SparseGraph g = build_graph(one, 2);
  Matrix x(2, 1);
  x << 1, 0;
  ad::Tape tape;
  CHECK(smoothing_loss(tape.constant(x), g).scalar() == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<Edge> cycle;
  for (std::size_t i = 0; i < 5; ++i) cycle.emplace_back(i, (i + 1) % 5);
  Matrix constant = Matrix::Constant(5, 3, 0.7);
  CHECK(std::abs(smoothing_loss(tape.constant(constant), build_graph(cycle, 5)).scalar()) < 1e-15);
  CHECK_THROWS_AS(smoothing_loss(tape.constant(constant), g), ShapeError);
}

TEST_CASE("smoothing matches both dense oracles, is non-negative and passes FD") {
  std::mt19937_64 rng(6);
  for (int seed = 0; seed < 20; ++seed) {
    const std::size_t n = 5 + rng() % 46;
    SparseGraph g = build_graph(dpgnn::testing::random_edges(n, 0.1, rng), n);
    Matrix x = random_matrix(static_cast<Index>(n), 4, rng);
    ad::Tape tape;
    const double s = smoothing_loss(tape.constant(x), g).scalar();
    CHECK(s >= 0.0);
    CHECK(std::abs(s - dpgnn::testing::dense_smoothing(x, g)) < 1e-8);
    CHECK(std::abs(s - dpgnn::testing::dense_smoothing_trace(x, g)) < 1e-8);
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 r(seed);
    SparseGraph g = build_graph(dpgnn::testing::random_edges(10, 0.3, r), 10);
    Matrix x = random_matrix(10, 3, r);
    CHECK(dpgnn::testing::gradient_check({x}, [&](ad::Tape&, const auto& v) {
            return smoothing_loss(v[0], g);
          }) < 1e-4);
  }
}

TEST_CASE("smoothing vanishes when g scales with the square root of the degree") {
  // g_i / sqrt(d~_i) constant over each component
  std::vector<Edge> edges{{0, 1}, {1, 2}, {1, 3}, {4, 5}};
  SparseGraph g = build_graph(edges, 6);
  Matrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    const double s = std::sqrt(static_cast<double>(g.self_loop_degree(i)));
    const double base = i < 4 ? 1.5 : -0.5;
    x(static_cast<Index>(i), 0) = base * s;
    x(static_cast<Index>(i), 1) = 2.0 * base * s;
  }
  ad::Tape tape;
  CHECK(std::abs(smoothing_loss(tape.constant(x), g).scalar()) < 1e-12);
}

}  // TEST_SUITE
