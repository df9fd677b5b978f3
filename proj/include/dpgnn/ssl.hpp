#pragma once

#include "dpgnn/autodiff.hpp"
#include "dpgnn/graph.hpp"

namespace dpgnn {

struct SslConfig {
  double lambda1 = 1.0;  // prototype separation
  double lambda2 = 1.0;  // metric smoothing
};

// Sum of off-diagonal cosine similarities between prototype rows; lies in
// [-C(C-1), C(C-1)]. Throws NumericError for a zero prototype.
ad::Tensor proto_separation_loss(const ad::Tensor& protos);

// sum_i sum_{j in N(i)} || g_i / sqrt(d~_i) - g_j / sqrt(d~_j) ||^2 with
// d~ = degree + 1. Every undirected edge is visited from both endpoints, so
// the value is 2 * trace(G^T (I - Â) G). Throws ShapeError when g_all does not
// have one row per node.
ad::Tensor smoothing_loss(const ad::Tensor& g_all, const SparseGraph& graph);

}  // namespace dpgnn
