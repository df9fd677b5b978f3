#pragma once

#include "dpgnn/matrix.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dpgnn {

using Edge = std::pair<std::size_t, std::size_t>;

// Undirected, unweighted graph stored as a symmetric CSR adjacency without
// self-loops. Column indices in every row are strictly increasing.
class SparseGraph {
 public:
  SparseGraph() = default;

  std::size_t num_nodes() const { return num_nodes_; }
  // Number of undirected edges (each stored twice).
  std::size_t num_edges() const { return col_idx_.size() / 2; }
  std::size_t num_stored_entries() const { return col_idx_.size(); }

  std::size_t degree(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  // D~_ii = D_ii + 1
  std::size_t self_loop_degree(std::size_t i) const { return degree(i) + 1; }
  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], degree(i)};
  }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  std::vector<std::size_t> degrees() const;

  // Unique undirected edges as (i, j) with i < j, in row order.
  std::vector<Edge> undirected_edges() const;

  friend SparseGraph build_graph(std::span<const Edge> edges, std::size_t num_nodes);

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
};

// Â = D~^{-1/2} (A + I) D~^{-1/2}, stored as CSR with the diagonal present.
struct NormalizedAdjacency {
  CsrMatrix matrix;

  std::size_t num_nodes() const { return static_cast<std::size_t>(matrix.rows); }
  Matrix to_dense() const { return matrix.to_dense(); }
};

// Symmetrizes and deduplicates the pairs; self-pairs are dropped.
// Throws InputError naming the first pair with an index >= num_nodes.
SparseGraph build_graph(std::span<const Edge> edges, std::size_t num_nodes);

NormalizedAdjacency normalize(const SparseGraph& g);

// Â·m in O((edges + n)·cols). Throws ShapeError on row mismatch.
Matrix spmm(const NormalizedAdjacency& adj, const Matrix& m);

// Fraction of undirected edges whose endpoints share a label.
// Throws InputError for an edgeless graph or a label vector of the wrong size.
double edge_homophily(const SparseGraph& g, std::span<const int> labels);

// Edge-list text files: one "u<TAB>v" pair per line, 0-based, '#' comments.
struct EdgeListFile {
  std::vector<Edge> edges;
  std::size_t max_index_plus_one = 0;
};
EdgeListFile read_edge_list(const std::string& path);
// Writes each undirected edge once as "i\tj" with i < j.
void write_edge_list(const std::string& path, const SparseGraph& g);

}  // namespace dpgnn
