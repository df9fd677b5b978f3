#include "dpgnn/error.hpp"
#include "dpgnn/graph.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace dpgnn;
using dpgnn::testing::dense_normalized;

TEST_SUITE("graph") {

TEST_CASE("single edge is stored in both directions") {
  std::vector<Edge> edges{{0, 1}};
  SparseGraph g = build_graph(edges, 2);
  CHECK(g.degrees() == std::vector<std::size_t>{1, 1});
  CHECK(g.num_stored_entries() == 2);
  CHECK(g.num_edges() == 1);
}

TEST_CASE("duplicate and reversed edges collapse") {
  std::vector<Edge> once{{0, 1}};
  std::vector<Edge> many{{0, 1}, {1, 0}, {0, 1}};
  SparseGraph a = build_graph(once, 2);
  SparseGraph b = build_graph(many, 2);
  CHECK(a.row_ptr() == b.row_ptr());
  CHECK(a.col_idx() == b.col_idx());
}

TEST_CASE("self pairs are dropped and out-of-range pairs rejected") {
  std::vector<Edge> loops{{0, 0}, {0, 1}};
  CHECK(build_graph(loops, 2).num_edges() == 1);
  std::vector<Edge> bad{{0, 5}};
  CHECK_THROWS_AS(build_graph(bad, 3), InputError);
}

TEST_CASE("csr rows are sorted, symmetric and match degrees") {
  std::mt19937_64 rng(3);
  for (int seed = 0; seed < 10; ++seed) {
    auto edges = dpgnn::testing::random_edges(30, 0.15, rng);
    std::shuffle(edges.begin(), edges.end(), rng);
    SparseGraph g = build_graph(edges, 30);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      auto nb = g.neighbors(i);
      CHECK(std::is_sorted(nb.begin(), nb.end()));
      CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
      CHECK(g.degree(i) == nb.size());
      for (std::size_t j : nb) {
        CHECK(j != i);
        auto back = g.neighbors(j);
        CHECK(std::binary_search(back.begin(), back.end(), i));
      }
    }
  }
}

TEST_CASE("two-node normalized adjacency is all 0.5") {
  std::vector<Edge> edges{{0, 1}};
  Matrix a = normalize(build_graph(edges, 2)).to_dense();
  CHECK(a.rows() == 2);
  for (Index i = 0; i < 4; ++i) CHECK(a.data()[i] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("isolated node keeps a unit self loop") {
  SparseGraph g = build_graph(std::vector<Edge>{}, 1);
  Matrix a = normalize(g).to_dense();
  CHECK(a.rows() == 1);
  CHECK(a(0, 0) == 1.0);
}

TEST_CASE("normalize matches the dense oracle and its structural invariants") {
  std::mt19937_64 rng(11);
  for (int seed = 0; seed < 20; ++seed) {
    const std::size_t n = 5 + rng() % 46;
    SparseGraph g = build_graph(dpgnn::testing::random_edges(n, 0.1, rng), n);
    NormalizedAdjacency adj = normalize(g);
    Matrix dense = adj.to_dense();
    CHECK((dense - dense_normalized(g)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Index>(i);
      CHECK(dense(ii, ii) == doctest::Approx(1.0 / static_cast<double>(g.self_loop_degree(i))));
    }
    for (double v : adj.matrix.values) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
    // Â·1 against the dense oracle
    Matrix ones = Matrix::Ones(static_cast<Index>(n), 1);
    CHECK((spmm(adj, ones) - dense_normalized(g) * ones).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("spmm small cases") {
  SparseGraph empty = build_graph(std::vector<Edge>{}, 3);
  std::mt19937_64 rng(2);
  Matrix m = dpgnn::testing::random_matrix(3, 4, rng);
  CHECK(spmm(normalize(empty), m) == m);

  std::vector<Edge> edges{{0, 1}};
  Matrix out = spmm(normalize(build_graph(edges, 2)), Matrix::Identity(2, 2));
  CHECK((out - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(spmm(normalize(empty), Matrix::Zero(2, 2)), ShapeError);
}

TEST_CASE("spmm matches dense products, including two applications") {
  std::mt19937_64 rng(5);
  for (int seed = 0; seed < 20; ++seed) {
    const std::size_t n = 40;
    SparseGraph g = build_graph(dpgnn::testing::random_edges(n, 0.08, rng), n);
    NormalizedAdjacency adj = normalize(g);
    Matrix dense = dense_normalized(g);
    Matrix m = dpgnn::testing::random_matrix(40, 6, rng);
    CHECK((spmm(adj, m) - dense * m).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((spmm(adj, spmm(adj, m)) - dense * dense * m).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("normalize and homophily ignore edge order") {
  std::mt19937_64 rng(8);
  auto edges = dpgnn::testing::random_edges(25, 0.2, rng);
  std::vector<int> labels(25);
  for (int i = 0; i < 25; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
  SparseGraph a = build_graph(edges, 25);
  auto shuffled = edges;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (auto& e : shuffled) std::swap(e.first, e.second);
  SparseGraph b = build_graph(shuffled, 25);
  CHECK(normalize(a).matrix.values == normalize(b).matrix.values);
  CHECK(edge_homophily(a, labels) == edge_homophily(b, labels));
}

TEST_CASE("edge homophily") {
  std::vector<Edge> triangle{{0, 1}, {1, 2}, {0, 2}};
  std::vector<int> same{0, 0, 0};
  CHECK(edge_homophily(build_graph(triangle, 3), same) == 1.0);
  std::vector<Edge> one{{0, 1}};
  std::vector<int> cross{0, 1};
  CHECK(edge_homophily(build_graph(one, 2), cross) == 0.0);
  CHECK_THROWS_AS(edge_homophily(build_graph(std::vector<Edge>{}, 2), cross), InputError);
  std::vector<int> short_labels{0};
  CHECK_THROWS_AS(edge_homophily(build_graph(one, 2), short_labels), InputError);
}

TEST_CASE("edge list files round trip and report bad lines") {
  auto dir = std::filesystem::temp_directory_path() / "dpgnn_graph_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(4);
  SparseGraph g = build_graph(dpgnn::testing::random_edges(15, 0.3, rng), 15);
  write_edge_list((dir / "e.tsv").string(), g);
  EdgeListFile f = read_edge_list((dir / "e.tsv").string());
  SparseGraph back = build_graph(f.edges, 15);
  CHECK(back.col_idx() == g.col_idx());
  CHECK(back.row_ptr() == g.row_ptr());

  {
    std::ofstream out(dir / "bad.tsv");
    out << "# header\n0\t1\n2\tx\n";
  }
  try {
    read_edge_list((dir / "bad.tsv").string());
    FAIL("expected an InputError");
  } catch (const InputError& e) {
    CHECK(e.line() == 3);
  }
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
