#pragma once

// Reverse-mode differentiation over dense row-major matrices.
//
// A Tape owns every value produced during one forward pass. Tensors are cheap
// handles (tape pointer + node id) into it. Operations append a node holding
// the forward value and a closure that maps the node's upstream gradient to
// contributions for its inputs. Tape::backward walks the nodes once in reverse
// recording order; contributions to a node that fans out are summed.
//
// A fresh Tape is meant to be built for every forward pass. Constant operands
// captured by reference (adjacency, sparse features) must outlive backward().

#include "dpgnn/graph.hpp"
#include "dpgnn/matrix.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dpgnn::ad {

using NodeId = std::size_t;

class Tape;

class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Convenience for 1x1 tensors.
  double scalar() const { return value()(0, 0); }
  NodeId id() const { return id_; }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Gradients of a scalar loss with respect to every requires_grad leaf.
class Gradients {
 public:
  const Matrix& at(const Tensor& t) const { return at(t.id()); }
  const Matrix& at(NodeId id) const;
  bool contains(NodeId id) const { return grads_.count(id) != 0; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<NodeId, Matrix> grads_;
};

// Receives one operation's gradient contributions during backward().
class GradSink {
 public:
  void add(const Tensor& input, const Matrix& contribution);
  void add(const Tensor& input, Matrix&& contribution);

 private:
  friend class Tape;
  explicit GradSink(Tape& tape, std::vector<Matrix>& grads) : tape_(tape), grads_(grads) {}
  Tape& tape_;
  std::vector<Matrix>& grads_;
};

class Tape {
 public:
  using BackwardFn = std::function<void(const Matrix& upstream, GradSink& sink)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor variable(Matrix value);

  // Appends an operation node. requires_grad is inherited from the inputs;
  // when no input requires a gradient the closure is dropped.
  Tensor record(std::string_view op, Matrix value, std::span<const Tensor> inputs,
                BackwardFn backward);
  Tensor record(std::string_view op, Matrix value, std::initializer_list<Tensor> inputs,
                BackwardFn backward) {
    return record(op, std::move(value), std::span<const Tensor>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  // Keeps an auxiliary object alive for the lifetime of the tape, e.g. a
  // dropout-masked copy of constant sparse features.
  template <class T>
  const T& hold(T obj) {
    auto p = std::make_shared<T>(std::move(obj));
    held_.push_back(p);
    return *p;
  }

  const Matrix& value(NodeId id) const { return nodes_.at(id).value; }
  bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
  const std::string& op_name(NodeId id) const { return nodes_.at(id).op; }
  std::size_t size() const { return nodes_.size(); }

  // Throws ShapeError when loss is not 1x1 or belongs to another tape.
  Gradients backward(const Tensor& loss);
  // Number of operation closures run by the most recent backward().
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  struct Node {
    std::string op;
    Matrix value;
    bool requires_grad = false;
    bool is_leaf = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::vector<std::shared_ptr<void>> held_;
  std::size_t last_visits_ = 0;
};

// ---------------------------------------------------------------------------
// Trainable parameters and their binding to a tape.

struct Parameter {
  std::string name;
  Matrix value;
  double weight_decay = 0.0;
  std::optional<double> learning_rate = std::nullopt;  // overrides the optimizer's rate
};

// Tracks which tape variable stands for which Parameter during one pass.
class ParameterBinding {
 public:
  // Returns a variable when trainable, otherwise a constant copy.
  Tensor bind(Tape& tape, Parameter& p, bool trainable = true);
  std::span<Parameter* const> params() const { return params_; }
  std::span<const Tensor> tensors() const { return tensors_; }
  // Gradients aligned with params(); zero for parameters the loss ignores.
  std::vector<Matrix> gradients(const Gradients& g) const;

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> tensors_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. All throw ShapeError (prefixed with the operation
// name) on incompatible shapes.

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// Â * x with a constant symmetric adjacency; backward is Â * upstream.
Tensor spmm_const(const NormalizedAdjacency& adj, const Tensor& x);
// x * w with constant sparse x; backward to w is x^T * upstream.
Tensor sparse_matmul_const(const CsrMatrix& x, const Tensor& w);
Tensor add_bias(const Tensor& x, const Tensor& b);
Tensor relu(const Tensor& x);
// Inverted dropout; exact identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng);
// x_i - v for every row i.
Tensor row_sub(const Tensor& x, const Tensor& v);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
// Rows of x at the given indices; repeated indices accumulate gradient.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor mean_rows(const Tensor& x);
// Sums consecutive row blocks: (blocks*k) x c -> k x c.
Tensor block_row_sum(const Tensor& w, Index blocks);
// r x c -> 1 x (r*c), row-major order.
Tensor flatten_rows(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
// Weighted mean of -ln probs(i, targets[i]); weights default to 1.
// Throws NumericError on a non-positive or non-finite target probability.
Tensor cross_entropy_rows(const Tensor& probs, std::span<const int> targets,
                          std::span<const double> weights = {});
// cross_entropy_rows(softmax_rows(logits), ...) fused through log-sum-exp.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> targets,
                             std::span<const double> weights = {});
// Pairwise cosine similarity of rows. Throws NumericError on a zero row.
Tensor cosine_sim_matrix(const Tensor& p);
Tensor off_diagonal_sum(const Tensor& x);
Tensor sum_all(const Tensor& x);
Tensor squared_norm(const Tensor& x);
// sum_k coeff_k * term_k over 1x1 tensors.
Tensor scalar_combine(std::span<const std::pair<Tensor, double>> terms);

}  // namespace dpgnn::ad
