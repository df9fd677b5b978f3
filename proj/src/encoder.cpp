#include "dpgnn/encoder.hpp"

#include "dpgnn/error.hpp"
#include "dpgnn/random.hpp"

#include <cmath>

namespace dpgnn {

GcnLayer GcnLayer::glorot(Index d_in, Index d_out, double weight_decay, std::mt19937_64& rng,
                          const std::string& name) {
  const double bound = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
  std::uniform_real_distribution<double> unif(-bound, bound);
  GcnLayer layer;
  layer.weight = {name + ".weight", Matrix(d_in, d_out), weight_decay};
  for (Index i = 0; i < layer.weight.value.size(); ++i) layer.weight.value.data()[i] = unif(rng);
  layer.bias = {name + ".bias", Matrix::Zero(1, d_out), 0.0};
  return layer;
}

std::vector<GcnLayer> make_gcn_layers(const EncoderConfig& cfg, std::mt19937_64& rng) {
  if (cfg.input_dim <= 0 || cfg.hidden_dim <= 0 || cfg.num_layers < 1 || cfg.output_dim < 0) {
    throw InputError("encoder config: dimensions and layer count must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw InputError("encoder config: dropout must lie in [0, 1)");
  }
  const Index out = cfg.output_dim > 0 ? cfg.output_dim : cfg.hidden_dim;
  std::vector<GcnLayer> layers;
  Index d_in = cfg.input_dim;
  for (int l = 0; l < cfg.num_layers; ++l) {
    const bool last = l + 1 == cfg.num_layers;
    const Index d_out = last ? out : cfg.hidden_dim;
    const double wd = l == 0 ? cfg.first_layer_weight_decay : cfg.other_layer_weight_decay;
    layers.push_back(GcnLayer::glorot(d_in, d_out, wd, rng, "gcn" + std::to_string(l + 1)));
    d_in = d_out;
  }
  return layers;
}

CsrMatrix dropout_sparse(const CsrMatrix& x, double rate, std::mt19937_64& rng) {
  const double keep = 1.0 - rate;
  MaskStream bits(rng);
  CsrMatrix out;
  out.rows = x.rows;
  out.cols = x.cols;
  out.row_ptr.assign(1, 0);
  out.row_ptr.reserve(x.row_ptr.size());
  out.col_idx.reserve(x.nnz());
  out.values.reserve(x.nnz());
  for (Index i = 0; i < x.rows; ++i) {
    for (std::size_t p = x.row_ptr[i]; p < x.row_ptr[i + 1]; ++p) {
      if (bits.uniform() < keep) {
        out.col_idx.push_back(x.col_idx[p]);
        out.values.push_back(x.values[p] / keep);
      }
    }
    out.row_ptr.push_back(out.values.size());
  }
  return out;
}

ad::Tensor encode(const NormalizedAdjacency& adj, const CsrMatrix& x, std::span<GcnLayer> layers,
                  ad::Tape& tape, ad::ParameterBinding& binding, bool training, double dropout,
                  std::mt19937_64& rng) {
  if (layers.empty()) throw ShapeError("encode", "no layers");
  if (static_cast<std::size_t>(x.rows) != adj.num_nodes()) {
    throw ShapeError("encode", "feature rows " + std::to_string(x.rows) + " != nodes " +
                                   std::to_string(adj.num_nodes()));
  }
  if (x.cols != layers[0].input_dim()) {
    throw ShapeError("encode", "feature width " + std::to_string(x.cols) +
                                   " != first layer input " +
                                   std::to_string(layers[0].input_dim()));
  }
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].input_dim() != layers[l - 1].output_dim()) {
      throw ShapeError("encode", "layer " + std::to_string(l + 1) + " input width mismatch");
    }
  }

  const bool drop = training && dropout > 0.0;
  const CsrMatrix& input = drop ? tape.hold(dropout_sparse(x, dropout, rng)) : x;

  ad::Tensor w = binding.bind(tape, layers[0].weight);
  ad::Tensor b = binding.bind(tape, layers[0].bias);
  ad::Tensor h = ad::add_bias(ad::spmm_const(adj, ad::sparse_matmul_const(input, w)), b);
  for (std::size_t l = 1; l < layers.size(); ++l) {
    h = ad::dropout(ad::relu(h), dropout, training, rng);
    w = binding.bind(tape, layers[l].weight);
    b = binding.bind(tape, layers[l].bias);
    h = ad::add_bias(ad::spmm_const(adj, ad::matmul(h, w)), b);
  }
  return h;
}

ad::Tensor encode(const NormalizedAdjacency& adj, const Matrix& x, std::span<GcnLayer> layers,
                  ad::Tape& tape, ad::ParameterBinding& binding, bool training, double dropout,
                  std::mt19937_64& rng) {
  const CsrMatrix& sparse = tape.hold(CsrMatrix::from_dense(x));
  return encode(adj, sparse, layers, tape, binding, training, dropout, rng);
}

EncoderReadout::EncoderReadout(const NormalizedAdjacency& adj, const CsrMatrix& x,
                               std::span<const GcnLayer> layers) {
  if (layers.empty()) throw ShapeError("EncoderReadout", "no layers");
  if (x.cols != layers[0].input_dim() || static_cast<std::size_t>(x.rows) != adj.num_nodes()) {
    throw ShapeError("EncoderReadout", "feature matrix does not match graph and first layer");
  }
  const GcnLayer& last = layers.back();
  bias_ = last.bias.value.row(0);
  if (layers.size() == 1) {
    z_ = spmm(adj, multiply(x, last.weight.value));
    return;
  }
  Matrix h = spmm(adj, multiply(x, layers[0].weight.value));
  h.rowwise() += layers[0].bias.value.row(0);
  for (std::size_t l = 1; l + 1 < layers.size(); ++l) {
    Matrix hw = h.cwiseMax(0.0) * layers[l].weight.value;
    h = spmm(adj, hw);
    h.rowwise() += layers[l].bias.value.row(0);
  }
  z_ = spmm(adj, h.cwiseMax(0.0));
  weight_ = last.weight.value;
}

Matrix EncoderReadout::finish(Matrix z_rows) const {
  if (weight_.size() != 0) z_rows = z_rows * weight_;
  z_rows.rowwise() += bias_;
  return z_rows;
}

Matrix EncoderReadout::rows(std::span<const std::size_t> nodes) const {
  Matrix z(static_cast<Index>(nodes.size()), z_.cols());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    if (nodes[r] >= static_cast<std::size_t>(z_.rows())) {
      throw ShapeError("EncoderReadout", "node " + std::to_string(nodes[r]) + " out of range");
    }
    z.row(static_cast<Index>(r)) = z_.row(static_cast<Index>(nodes[r]));
  }
  return finish(std::move(z));
}

Matrix EncoderReadout::all() const { return finish(z_); }

Matrix EncoderReadout::group_means(const std::vector<std::vector<std::size_t>>& groups) const {
  Matrix z = Matrix::Zero(static_cast<Index>(groups.size()), z_.cols());
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) throw InputError("class " + std::to_string(c) + " has no nodes");
    for (std::size_t i : groups[c]) {
      if (i >= static_cast<std::size_t>(z_.rows())) {
        throw ShapeError("EncoderReadout", "node " + std::to_string(i) + " out of range");
      }
      z.row(static_cast<Index>(c)) += z_.row(static_cast<Index>(i));
    }
    z.row(static_cast<Index>(c)) /= static_cast<double>(groups[c].size());
  }
  return finish(std::move(z));
}

}  // namespace dpgnn
