#include "dpgnn/metric.hpp"

#include "dpgnn/error.hpp"

#include <cmath>
#include <numeric>

namespace dpgnn {

DistanceMetricLayer DistanceMetricLayer::glorot(Index embed_dim, int num_classes, Index metric_dim,
                                                std::mt19937_64& rng, double weight_decay) {
  const Index fan_in = embed_dim * num_classes;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + metric_dim));
  std::uniform_real_distribution<double> unif(-bound, bound);
  DistanceMetricLayer layer;
  layer.weight = {"metric.weight", Matrix(fan_in, metric_dim), weight_decay};
  for (Index i = 0; i < layer.weight.value.size(); ++i) layer.weight.value.data()[i] = unif(rng);
  layer.bias = {"metric.bias", Matrix::Zero(1, metric_dim), 0.0};
  return layer;
}

namespace {

void check_metric_shapes(const char* op, const ad::Tensor& h, const ad::Tensor& protos,
                         const ad::Tensor* w, const ad::Tensor* b) {
  if (h.cols() != protos.cols()) {
    throw ShapeError(op, "embedding width " + std::to_string(h.cols()) +
                             " != prototype width " + std::to_string(protos.cols()));
  }
  if (w != nullptr && w->rows() != protos.rows() * protos.cols()) {
    throw ShapeError(op, "weight has " + std::to_string(w->rows()) + " rows, expected C*d' = " +
                             std::to_string(protos.rows() * protos.cols()));
  }
  if (w != nullptr && b != nullptr && (b->rows() != 1 || b->cols() != w->cols())) {
    throw ShapeError(op, "bias width does not match weight");
  }
}

}  // namespace

ad::Tensor difference_embed(const ad::Tensor& h_rows, const ad::Tensor& protos) {
  check_metric_shapes("difference_embed", h_rows, protos, nullptr, nullptr);
  std::vector<ad::Tensor> blocks;
  blocks.reserve(static_cast<std::size_t>(protos.rows()));
  for (Index c = 0; c < protos.rows(); ++c) {
    const std::size_t row = static_cast<std::size_t>(c);
    blocks.push_back(ad::row_sub(h_rows, ad::gather_rows(protos, std::span(&row, 1))));
  }
  return ad::concat_cols(blocks);
}

ad::Tensor metric_embed(const ad::Tensor& h_rows, const ad::Tensor& protos, const ad::Tensor& w,
                        const ad::Tensor& b) {
  check_metric_shapes("metric_embed", h_rows, protos, &w, &b);
  return ad::add_bias(ad::matmul(difference_embed(h_rows, protos), w), b);
}

ad::Tensor metric_embed_factored(const ad::Tensor& h_rows, const ad::Tensor& protos,
                                 const ad::Tensor& w, const ad::Tensor& b) {
  check_metric_shapes("metric_embed_factored", h_rows, protos, &w, &b);
  ad::Tensor w_sum = ad::block_row_sum(w, protos.rows());
  ad::Tensor offset = ad::matmul(ad::flatten_rows(protos), w);
  return ad::add_bias(ad::row_sub(ad::matmul(h_rows, w_sum), offset), b);
}

ad::Tensor classify_queries(const ad::Tensor& g_query, const ad::Tensor& g_support) {
  return ad::softmax_rows(ad::matmul_nt(g_query, g_support));
}

namespace {
std::vector<int> diagonal_targets(Index rows) {
  std::vector<int> t(static_cast<std::size_t>(rows));
  std::iota(t.begin(), t.end(), 0);
  return t;
}
}  // namespace

ad::Tensor classification_loss(const ad::Tensor& f) {
  if (f.rows() != f.cols()) throw ShapeError("classification_loss", "F must be C x C");
  return ad::cross_entropy_rows(f, diagonal_targets(f.rows()));
}

ad::Tensor classification_loss_from_logits(const ad::Tensor& logits) {
  if (logits.rows() != logits.cols()) {
    throw ShapeError("classification_loss_from_logits", "logits must be C x C");
  }
  return ad::softmax_cross_entropy(logits, diagonal_targets(logits.rows()));
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict_nodes(const Matrix& h_all, const Matrix& protos,
                               const DistanceMetricLayer& layer) {
  ad::Tape tape;
  ad::Tensor h = tape.constant(h_all);
  ad::Tensor p = tape.constant(protos);
  ad::Tensor w = tape.constant(layer.weight.value);
  ad::Tensor b = tape.constant(layer.bias.value);
  ad::Tensor g_support = metric_embed(p, p, w, b);
  ad::Tensor g_all = metric_embed_factored(h, p, w, b);
  // softmax is strictly increasing within a row, so the logit argmax is the
  // probability argmax.
  return argmax_rows(g_all.value() * g_support.value().transpose());
}

std::vector<int> predict_nodes(const Matrix& h_all, const Matrix& protos) {
  ad::Tape tape;
  ad::Tensor p = tape.constant(protos);
  ad::Tensor g_support = difference_embed(p, p);
  ad::Tensor g_all = difference_embed(tape.constant(h_all), p);
  return argmax_rows(g_all.value() * g_support.value().transpose());
}

}  // namespace dpgnn
