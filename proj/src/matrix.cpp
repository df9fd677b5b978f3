#include "dpgnn/matrix.hpp"

#include "dpgnn/error.hpp"

#include <cmath>
#include <string>

namespace dpgnn {

CsrMatrix CsrMatrix::from_dense(const Matrix& dense, double drop_tol) {
  CsrMatrix out;
  out.rows = dense.rows();
  out.cols = dense.cols();
  out.row_ptr.assign(1, 0);
  out.row_ptr.reserve(static_cast<std::size_t>(dense.rows()) + 1);
  for (Index i = 0; i < dense.rows(); ++i) {
    for (Index j = 0; j < dense.cols(); ++j) {
      const double v = dense(i, j);
      if (std::abs(v) > drop_tol) {
        out.col_idx.push_back(static_cast<std::size_t>(j));
        out.values.push_back(v);
      }
    }
    out.row_ptr.push_back(out.values.size());
  }
  return out;
}

Matrix CsrMatrix::to_dense() const {
  Matrix dense = Matrix::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      dense(i, static_cast<Index>(col_idx[p])) += values[p];
    }
  }
  return dense;
}

Matrix multiply(const CsrMatrix& a, const Matrix& m) {
  if (a.cols != m.rows()) {
    throw ShapeError("csr_multiply", "sparse cols " + std::to_string(a.cols) +
                                         " != dense rows " + std::to_string(m.rows()));
  }
  Matrix out = Matrix::Zero(a.rows, m.cols());
  for (Index i = 0; i < a.rows; ++i) {
    auto out_row = out.row(i);
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      out_row.noalias() += a.values[p] * m.row(static_cast<Index>(a.col_idx[p]));
    }
  }
  return out;
}

Matrix multiply_transposed(const CsrMatrix& a, const Matrix& m) {
  if (a.rows != m.rows()) {
    throw ShapeError("csr_multiply_transposed", "sparse rows " + std::to_string(a.rows) +
                                                    " != dense rows " + std::to_string(m.rows()));
  }
  Matrix out = Matrix::Zero(a.cols, m.cols());
  for (Index i = 0; i < a.rows; ++i) {
    const auto m_row = m.row(i);
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      out.row(static_cast<Index>(a.col_idx[p])).noalias() += a.values[p] * m_row;
    }
  }
  return out;
}

}  // namespace dpgnn
