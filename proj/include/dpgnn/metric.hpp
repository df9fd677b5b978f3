#pragma once

#include "dpgnn/autodiff.hpp"

#include <random>
#include <span>
#include <vector>

namespace dpgnn {

// Linear map f2 from the concatenated prototype differences (C*d') to the
// distance-metric space (d'').
struct DistanceMetricLayer {
  ad::Parameter weight;  // (d' * C) x d''
  ad::Parameter bias;    // 1 x d''

  static DistanceMetricLayer glorot(Index embed_dim, int num_classes, Index metric_dim,
                                    std::mt19937_64& rng, double weight_decay = 0.0);
  Index metric_dim() const { return weight.value.cols(); }
};

// For every row h: concat_c(h - p_c) * W + b, classes in ascending order.
// Computed literally through row_sub/concat_cols; intended for the C query and
// C prototype rows. Throws ShapeError when widths disagree.
ad::Tensor metric_embed(const ad::Tensor& h_rows, const ad::Tensor& protos, const ad::Tensor& w,
                        const ad::Tensor& b);

// Same map as metric_embed rewritten as
//   h * (sum_c W_c) - concat_c(p_c) * W + b,
// where W_c is the c-th d' x d'' row block of W. Costs O(r d' d'') instead of
// O(r C d' d''); used for the full n x d'' representation.
ad::Tensor metric_embed_factored(const ad::Tensor& h_rows, const ad::Tensor& protos,
                                 const ad::Tensor& w, const ad::Tensor& b);

// Variant without f2: the metric representation is the raw concatenation of
// differences (used by the use_distance_metric=false ablation).
ad::Tensor difference_embed(const ad::Tensor& h_rows, const ad::Tensor& protos);

// F = softmax_rows(G_Q * G_S^T).
ad::Tensor classify_queries(const ad::Tensor& g_query, const ad::Tensor& g_support);

// -(1/C) sum_c ln F_cc. Throws NumericError on a non-positive diagonal entry.
ad::Tensor classification_loss(const ad::Tensor& f);
// Same loss evaluated from the logits G_Q * G_S^T via log-sum-exp.
ad::Tensor classification_loss_from_logits(const ad::Tensor& logits);

// Row-wise argmax; ties go to the lowest column.
std::vector<int> argmax_rows(const Matrix& scores);

// Labels every row of h_all by its most probable class under
// softmax(metric_embed(h) * G_S^T). Evaluates without recording gradients.
std::vector<int> predict_nodes(const Matrix& h_all, const Matrix& protos,
                               const DistanceMetricLayer& layer);
// Same rule with difference_embed in place of the learned map.
std::vector<int> predict_nodes(const Matrix& h_all, const Matrix& protos);

}  // namespace dpgnn
