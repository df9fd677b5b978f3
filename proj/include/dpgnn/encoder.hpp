#pragma once

#include "dpgnn/autodiff.hpp"
#include "dpgnn/graph.hpp"

#include <random>
#include <span>
#include <vector>

namespace dpgnn {

struct GcnLayer {
  ad::Parameter weight;  // d_in x d_out
  ad::Parameter bias;    // 1 x d_out

  // Glorot-uniform weight in [-sqrt(6/(d_in+d_out)), +sqrt(...)], zero bias.
  static GcnLayer glorot(Index d_in, Index d_out, double weight_decay, std::mt19937_64& rng,
                         const std::string& name);
  Index input_dim() const { return weight.value.rows(); }
  Index output_dim() const { return weight.value.cols(); }
};

struct EncoderConfig {
  Index input_dim = 0;
  Index hidden_dim = 256;
  // Width of the last layer; 0 means hidden_dim. The GCN baselines set it to C.
  Index output_dim = 0;
  int num_layers = 2;
  double dropout = 0.5;
  double first_layer_weight_decay = 5e-4;
  double other_layer_weight_decay = 0.0;
};

// Throws InputError for non-positive widths/layer counts or dropout outside [0, 1).
std::vector<GcnLayer> make_gcn_layers(const EncoderConfig& cfg, std::mt19937_64& rng);

// Zeroes each stored entry with probability rate and rescales survivors by
// 1/(1-rate). Entries that are already zero stay zero, so this matches dense
// inverted dropout.
CsrMatrix dropout_sparse(const CsrMatrix& x, double rate, std::mt19937_64& rng);

// GCN forward pass
//   H_1 = dropout(relu(Â (dropout(X) W_1) + b_1))
//   H_l = Â (H_{l-1} W_l) + b_l        (last layer, no activation)
// Dropout is applied only when training. Parameters are bound into `binding`.
// `x` must outlive the tape's backward pass.
ad::Tensor encode(const NormalizedAdjacency& adj, const CsrMatrix& x, std::span<GcnLayer> layers,
                  ad::Tape& tape, ad::ParameterBinding& binding, bool training, double dropout,
                  std::mt19937_64& rng);

// Dense-feature convenience overload; the sparse copy is kept on the tape.
ad::Tensor encode(const NormalizedAdjacency& adj, const Matrix& x, std::span<GcnLayer> layers,
                  ad::Tape& tape, ad::ParameterBinding& binding, bool training, double dropout,
                  std::mt19937_64& rng);

// Evaluation-mode encoder output, computed only for the rows asked for. The
// last layer is linear, so H = Z W_L + b_L with Z = Â relu(H_{L-1}), and
// rows or row means of H need only the matching rows of Z.
class EncoderReadout {
 public:
  EncoderReadout(const NormalizedAdjacency& adj, const CsrMatrix& x,
                 std::span<const GcnLayer> layers);

  Matrix rows(std::span<const std::size_t> nodes) const;
  Matrix all() const;
  // Row c is the mean of H over groups[c]. Throws InputError for an empty group.
  Matrix group_means(const std::vector<std::vector<std::size_t>>& groups) const;

 private:
  Matrix finish(Matrix z_rows) const;

  Matrix z_;
  Matrix weight_;  // empty for a single-layer encoder
  RowVector bias_;
};

}  // namespace dpgnn
