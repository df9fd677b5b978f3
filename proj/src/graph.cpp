#include "dpgnn/graph.hpp"

#include "dpgnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dpgnn {

std::vector<std::size_t> SparseGraph::degrees() const {
  std::vector<std::size_t> out(num_nodes_);
  for (std::size_t i = 0; i < num_nodes_; ++i) out[i] = degree(i);
  return out;
}

std::vector<Edge> SparseGraph::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    for (std::size_t j : neighbors(i)) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

SparseGraph build_graph(std::span<const Edge> edges, std::size_t num_nodes) {
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw InputError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (u == v) continue;
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  SparseGraph g;
  g.num_nodes_ = num_nodes;
  g.row_ptr_.assign(num_nodes + 1, 0);
  g.col_idx_.reserve(directed.size());
  for (const auto& [u, v] : directed) {
    ++g.row_ptr_[u + 1];
    g.col_idx_.push_back(v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) g.row_ptr_[i + 1] += g.row_ptr_[i];
  return g;
}

NormalizedAdjacency normalize(const SparseGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.self_loop_degree(i)));
  }

  NormalizedAdjacency adj;
  CsrMatrix& m = adj.matrix;
  m.rows = m.cols = static_cast<Index>(n);
  m.row_ptr.assign(1, 0);
  m.row_ptr.reserve(n + 1);
  m.col_idx.reserve(g.num_stored_entries() + n);
  m.values.reserve(g.num_stored_entries() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool diagonal_done = false;
    auto emit_diagonal = [&] {
      m.col_idx.push_back(i);
      m.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
      diagonal_done = true;
    };
    for (std::size_t j : g.neighbors(i)) {
      if (!diagonal_done && j > i) emit_diagonal();
      m.col_idx.push_back(j);
      m.values.push_back(inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!diagonal_done) emit_diagonal();
    m.row_ptr.push_back(m.col_idx.size());
  }
  return adj;
}

Matrix spmm(const NormalizedAdjacency& adj, const Matrix& m) {
  if (m.rows() != adj.matrix.rows) {
    throw ShapeError("spmm", "adjacency has " + std::to_string(adj.matrix.rows) +
                                 " rows but dense operand has " + std::to_string(m.rows()));
  }
  return multiply(adj.matrix, m);
}

double edge_homophily(const SparseGraph& g, std::span<const int> labels) {
  if (labels.size() != g.num_nodes()) {
    throw InputError("edge_homophily: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  if (g.num_edges() == 0) throw InputError("edge_homophily: graph has no edges");
  std::size_t same = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t j : g.neighbors(i)) {
      if (i < j && labels[i] == labels[j]) ++same;
    }
  }
  return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

EdgeListFile read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open edge list");
  EdgeListFile out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long u = -1;
    long long v = -1;
    std::string rest;
    if (!(fields >> u >> v) || (fields >> rest)) {
      throw InputError(path, line_no, "expected two integer node indices");
    }
    if (u < 0 || v < 0) throw InputError(path, line_no, "negative node index");
    out.edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    out.max_index_plus_one =
        std::max(out.max_index_plus_one, static_cast<std::size_t>(std::max(u, v)) + 1);
  }
  return out;
}

void write_edge_list(const std::string& path, const SparseGraph& g) {
  std::ofstream out(path);
  if (!out) throw InputError(path, 0, "cannot open for writing");
  for (const auto& [i, j] : g.undirected_edges()) out << i << '\t' << j << '\n';
}

}  // namespace dpgnn
