#include "dpgnn/ssl.hpp"

#include "dpgnn/error.hpp"

#include <cmath>

namespace dpgnn {

ad::Tensor proto_separation_loss(const ad::Tensor& protos) {
  return ad::off_diagonal_sum(ad::cosine_sim_matrix(protos));
}

ad::Tensor smoothing_loss(const ad::Tensor& g_all, const SparseGraph& graph) {
  if (!g_all.valid()) throw ShapeError("smoothing_loss", "uninitialised tensor");
  const std::size_t n = graph.num_nodes();
  if (static_cast<std::size_t>(g_all.rows()) != n) {
    throw ShapeError("smoothing_loss", std::to_string(g_all.rows()) + " rows for " +
                                           std::to_string(n) + " nodes");
  }
  Eigen::VectorXd inv_sqrt(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt(static_cast<Index>(i)) = 1.0 / std::sqrt(static_cast<double>(graph.self_loop_degree(i)));
  }
  // u_i = g_i / sqrt(d~_i)
  Matrix u = (g_all.value().array().colwise() * inv_sqrt.array()).matrix();

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : graph.neighbors(i)) {
      loss += (u.row(static_cast<Index>(i)) - u.row(static_cast<Index>(j))).squaredNorm();
    }
  }
  Matrix value(1, 1);
  value(0, 0) = loss;
  const SparseGraph* gp = &graph;
  return g_all.tape()->record(
      "smoothing_loss", std::move(value), {g_all},
      [g_all, gp, u = std::move(u), inv_sqrt = std::move(inv_sqrt)](const Matrix& up,
                                                                   ad::GradSink& s) {
        // Each ordered pair (i, j) contributes 2(u_i - u_j) to dL/du_i and the
        // reverse to dL/du_j; both orientations are stored, giving 4 sum_j (u_i - u_j).
        Matrix du = Matrix::Zero(u.rows(), u.cols());
        for (std::size_t i = 0; i < gp->num_nodes(); ++i) {
          auto row = du.row(static_cast<Index>(i));
          for (std::size_t j : gp->neighbors(i)) {
            row += u.row(static_cast<Index>(i)) - u.row(static_cast<Index>(j));
          }
        }
        du *= 4.0 * up(0, 0);
        s.add(g_all, (du.array().colwise() * inv_sqrt.array()).matrix());
      });
}

}  // namespace dpgnn
