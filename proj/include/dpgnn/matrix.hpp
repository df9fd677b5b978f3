#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dpgnn {

// Dense real matrices are row-major so a node's feature row is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

// Compressed sparse row matrix over doubles.
struct CsrMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  // Keeps entries whose magnitude exceeds drop_tol.
  static CsrMatrix from_dense(const Matrix& dense, double drop_tol = 0.0);
  Matrix to_dense() const;
};

// this * m
Matrix multiply(const CsrMatrix& a, const Matrix& m);
// this^T * m
Matrix multiply_transposed(const CsrMatrix& a, const Matrix& m);

}  // namespace dpgnn
