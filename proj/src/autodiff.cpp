#include "dpgnn/autodiff.hpp"

#include "dpgnn/error.hpp"
#include "dpgnn/random.hpp"

#include <cmath>
#include <limits>

namespace dpgnn::ad {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_tape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (!a.valid() || !b.valid()) throw ShapeError(std::string(op), "uninitialised tensor");
  if (a.tape() != b.tape()) throw ShapeError(std::string(op), "operands live on different tapes");
}

void require_valid(std::string_view op, const Tensor& a) {
  if (!a.valid()) throw ShapeError(std::string(op), "uninitialised tensor");
}

void require_scalar(std::string_view op, const Tensor& t) {
  if (t.rows() != 1 || t.cols() != 1) {
    throw ShapeError(std::string(op), "expected 1x1, got " + shape_str(t.value()));
  }
}

Matrix scalar_matrix(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

// Validates targets/weights for the row-wise cross-entropy variants and
// returns the weight normaliser.
double check_targets(std::string_view op, const Matrix& x, std::span<const int> targets,
                     std::span<const double> weights) {
  if (static_cast<Index>(targets.size()) != x.rows()) {
    throw ShapeError(std::string(op), std::to_string(targets.size()) + " targets for " +
                                          std::to_string(x.rows()) + " rows");
  }
  if (!weights.empty() && weights.size() != targets.size()) {
    throw ShapeError(std::string(op), "weight count differs from target count");
  }
  if (targets.empty()) throw ShapeError(std::string(op), "no rows");
  for (int t : targets) {
    if (t < 0 || t >= x.cols()) {
      throw ShapeError(std::string(op), "target " + std::to_string(t) + " outside [0, " +
                                            std::to_string(x.cols()) + ")");
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) total += weights.empty() ? 1.0 : weights[i];
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError(std::string(op) + ": weights must sum to a positive finite value");
  }
  return total;
}

}  // namespace

const Matrix& Tensor::value() const { return tape_->value(id_); }
bool Tensor::requires_grad() const { return tape_->requires_grad(id_); }

const Matrix& Gradients::at(NodeId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw Error("no gradient recorded for node " + std::to_string(id));
  return it->second;
}

void GradSink::add(const Tensor& input, const Matrix& contribution) {
  if (!tape_.requires_grad(input.id())) return;
  Matrix& g = grads_[input.id()];
  if (g.size() == 0) {
    g = contribution;
  } else {
    g += contribution;
  }
}

void GradSink::add(const Tensor& input, Matrix&& contribution) {
  if (!tape_.requires_grad(input.id())) return;
  Matrix& g = grads_[input.id()];
  if (g.size() == 0) {
    g = std::move(contribution);
  } else {
    g += contribution;
  }
}

Tensor Tape::constant(Matrix value) {
  nodes_.push_back(Node{"constant", std::move(value), false, true, {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Matrix value) {
  nodes_.push_back(Node{"variable", std::move(value), true, true, {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(std::string_view op, Matrix value, std::span<const Tensor> inputs,
                    BackwardFn backward) {
  bool needs_grad = false;
  for (const Tensor& t : inputs) {
    if (t.tape() != this) throw ShapeError(std::string(op), "input recorded on another tape");
    needs_grad = needs_grad || requires_grad(t.id());
  }
  nodes_.push_back(Node{std::string(op), std::move(value), needs_grad, false,
                        needs_grad ? std::move(backward) : BackwardFn{}});
  return Tensor(this, nodes_.size() - 1);
}

Gradients Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw ShapeError("backward", "loss is not on this tape");
  require_scalar("backward", loss);

  std::vector<Matrix> grads(loss.id() + 1);
  grads[loss.id()] = Matrix::Ones(1, 1);
  GradSink sink(*this, grads);
  last_visits_ = 0;

  Gradients out;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad) continue;
    if (node.is_leaf) {
      out.grads_[i] = grads[i].size() == 0 ? Matrix::Zero(node.value.rows(), node.value.cols())
                                           : std::move(grads[i]);
      continue;
    }
    if (grads[i].size() == 0 || !node.backward) continue;
    node.backward(grads[i], sink);
    ++last_visits_;
    grads[i] = Matrix();
  }
  // Leaves recorded after the loss are unreachable from it.
  for (std::size_t i = loss.id() + 1; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf && nodes_[i].requires_grad) {
      out.grads_[i] = Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
    }
  }
  return out;
}

Tensor ParameterBinding::bind(Tape& tape, Parameter& p, bool trainable) {
  Tensor t = trainable ? tape.variable(p.value) : tape.constant(p.value);
  params_.push_back(&p);
  tensors_.push_back(t);
  return t;
}

std::vector<Matrix> ParameterBinding::gradients(const Gradients& g) const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (g.contains(tensors_[i].id())) {
      out.push_back(g.at(tensors_[i]));
    } else {
      out.push_back(Matrix::Zero(params_[i]->value.rows(), params_[i]->value.cols()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape("matmul", a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul", shape_str(a.value()) + " * " + shape_str(b.value()));
  }
  Matrix out = a.value() * b.value();
  return a.tape()->record("matmul", std::move(out), {a, b}, [a, b](const Matrix& g, GradSink& s) {
    if (a.requires_grad()) s.add(a, g * b.value().transpose());
    if (b.requires_grad()) s.add(b, a.value().transpose() * g);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_same_tape("matmul_nt", a, b);
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt", shape_str(a.value()) + " * (" + shape_str(b.value()) + ")^T");
  }
  Matrix out = a.value() * b.value().transpose();
  return a.tape()->record("matmul_nt", std::move(out), {a, b},
                          [a, b](const Matrix& g, GradSink& s) {
                            if (a.requires_grad()) s.add(a, g * b.value());
                            if (b.requires_grad()) s.add(b, g.transpose() * a.value());
                          });
}

Tensor spmm_const(const NormalizedAdjacency& adj, const Tensor& x) {
  require_valid("spmm_const", x);
  if (x.rows() != adj.matrix.rows) {
    throw ShapeError("spmm_const", "adjacency over " + std::to_string(adj.matrix.rows) +
                                       " nodes, operand " + shape_str(x.value()));
  }
  Matrix out = spmm(adj, x.value());
  const NormalizedAdjacency* a = &adj;
  return x.tape()->record("spmm_const", std::move(out), {x},
                          [a, x](const Matrix& g, GradSink& s) { s.add(x, spmm(*a, g)); });
}

Tensor sparse_matmul_const(const CsrMatrix& x, const Tensor& w) {
  require_valid("sparse_matmul_const", w);
  if (x.cols != w.rows()) {
    throw ShapeError("sparse_matmul_const", "sparse " + std::to_string(x.rows) + "x" +
                                                std::to_string(x.cols) + " * " +
                                                shape_str(w.value()));
  }
  Matrix out = multiply(x, w.value());
  const CsrMatrix* xp = &x;
  return w.tape()->record(
      "sparse_matmul_const", std::move(out), {w},
      [xp, w](const Matrix& g, GradSink& s) { s.add(w, multiply_transposed(*xp, g)); });
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  require_same_tape("add_bias", x, b);
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw ShapeError("add_bias", "bias " + shape_str(b.value()) + " for " + shape_str(x.value()));
  }
  Matrix out = x.value().rowwise() + b.value().row(0);
  return x.tape()->record("add_bias", std::move(out), {x, b}, [x, b](const Matrix& g, GradSink& s) {
    if (x.requires_grad()) s.add(x, g);
    if (b.requires_grad()) s.add(b, g.colwise().sum());
  });
}

Tensor relu(const Tensor& x) {
  require_valid("relu", x);
  Matrix out = x.value().cwiseMax(0.0);
  return x.tape()->record("relu", std::move(out), {x}, [x](const Matrix& g, GradSink& s) {
    s.add(x, (x.value().array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng) {
  require_valid("dropout", x);
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ShapeError("dropout", "rate " + std::to_string(rate) + " outside [0, 1)");
  }
  if (!training || rate == 0.0) return x;
  const double keep = 1.0 - rate;
  MaskStream bits(rng);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = bits.uniform() < keep ? 1.0 / keep : 0.0;
  }
  Matrix out = x.value().cwiseProduct(mask);
  return x.tape()->record("dropout", std::move(out), {x},
                          [x, mask = std::move(mask)](const Matrix& g, GradSink& s) {
                            s.add(x, g.cwiseProduct(mask));
                          });
}

Tensor row_sub(const Tensor& x, const Tensor& v) {
  require_same_tape("row_sub", x, v);
  if (v.rows() != 1 || v.cols() != x.cols()) {
    throw ShapeError("row_sub", "vector " + shape_str(v.value()) + " for " + shape_str(x.value()));
  }
  Matrix out = x.value().rowwise() - v.value().row(0);
  return x.tape()->record("row_sub", std::move(out), {x, v}, [x, v](const Matrix& g, GradSink& s) {
    if (x.requires_grad()) s.add(x, g);
    if (v.requires_grad()) s.add(v, -g.colwise().sum());
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_tape("sub", a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("sub", shape_str(a.value()) + " - " + shape_str(b.value()));
  }
  Matrix out = a.value() - b.value();
  return a.tape()->record("sub", std::move(out), {a, b}, [a, b](const Matrix& g, GradSink& s) {
    if (a.requires_grad()) s.add(a, g);
    if (b.requires_grad()) s.add(b, -g);
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols", "no parts");
  Index total = 0;
  for (const Tensor& p : parts) {
    require_same_tape("concat_cols", parts[0], p);
    if (p.rows() != parts[0].rows()) {
      throw ShapeError("concat_cols", "row counts differ: " + shape_str(parts[0].value()) +
                                          " vs " + shape_str(p.value()));
    }
    total += p.cols();
  }
  Matrix out(parts[0].rows(), total);
  Index offset = 0;
  for (const Tensor& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return parts[0].tape()->record("concat_cols", std::move(out), parts,
                                 [inputs](const Matrix& g, GradSink& s) {
                                   Index off = 0;
                                   for (const Tensor& p : inputs) {
                                     if (p.requires_grad()) s.add(p, g.middleCols(off, p.cols()));
                                     off += p.cols();
                                   }
                                 });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows", "no parts");
  Index total = 0;
  for (const Tensor& p : parts) {
    require_same_tape("concat_rows", parts[0], p);
    if (p.cols() != parts[0].cols()) {
      throw ShapeError("concat_rows", "column counts differ: " + shape_str(parts[0].value()) +
                                          " vs " + shape_str(p.value()));
    }
    total += p.rows();
  }
  Matrix out(total, parts[0].cols());
  Index offset = 0;
  for (const Tensor& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return parts[0].tape()->record("concat_rows", std::move(out), parts,
                                 [inputs](const Matrix& g, GradSink& s) {
                                   Index off = 0;
                                   for (const Tensor& p : inputs) {
                                     if (p.requires_grad()) s.add(p, g.middleRows(off, p.rows()));
                                     off += p.rows();
                                   }
                                 });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_valid("gather_rows", x);
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<Index>(rows[r]) >= x.rows()) {
      throw ShapeError("gather_rows", "row " + std::to_string(rows[r]) + " outside " +
                                          shape_str(x.value()));
    }
    out.row(static_cast<Index>(r)) = x.value().row(static_cast<Index>(rows[r]));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return x.tape()->record("gather_rows", std::move(out), {x},
                          [x, idx = std::move(idx)](const Matrix& g, GradSink& s) {
                            Matrix full = Matrix::Zero(x.rows(), x.cols());
                            for (std::size_t r = 0; r < idx.size(); ++r) {
                              full.row(static_cast<Index>(idx[r])) += g.row(static_cast<Index>(r));
                            }
                            s.add(x, full);
                          });
}

Tensor mean_rows(const Tensor& x) {
  require_valid("mean_rows", x);
  if (x.rows() == 0) throw ShapeError("mean_rows", "empty input");
  Matrix out = x.value().colwise().mean();
  return x.tape()->record("mean_rows", std::move(out), {x}, [x](const Matrix& g, GradSink& s) {
    const double inv = 1.0 / static_cast<double>(x.rows());
    s.add(x, (g * inv).replicate(x.rows(), 1));
  });
}

Tensor block_row_sum(const Tensor& w, Index blocks) {
  require_valid("block_row_sum", w);
  if (blocks <= 0 || w.rows() % blocks != 0) {
    throw ShapeError("block_row_sum", shape_str(w.value()) + " not divisible into " +
                                          std::to_string(blocks) + " row blocks");
  }
  const Index k = w.rows() / blocks;
  Matrix out = Matrix::Zero(k, w.cols());
  for (Index b = 0; b < blocks; ++b) out += w.value().middleRows(b * k, k);
  return w.tape()->record("block_row_sum", std::move(out), {w},
                          [w, blocks](const Matrix& g, GradSink& s) {
                            s.add(w, g.replicate(blocks, 1));
                          });
}

Tensor flatten_rows(const Tensor& x) {
  require_valid("flatten_rows", x);
  const Index r = x.rows();
  const Index c = x.cols();
  Matrix out = Eigen::Map<const Matrix>(x.value().data(), 1, r * c);
  return x.tape()->record("flatten_rows", std::move(out), {x},
                          [x, r, c](const Matrix& g, GradSink& s) {
                            s.add(x, Eigen::Map<const Matrix>(g.data(), r, c));
                          });
}

Tensor softmax_rows(const Tensor& x) {
  require_valid("softmax_rows", x);
  Matrix out = x.value();
  for (Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  Matrix y = out;
  return x.tape()->record("softmax_rows", std::move(out), {x},
                          [x, y = std::move(y)](const Matrix& g, GradSink& s) {
                            Matrix gy = g.cwiseProduct(y);
                            Eigen::VectorXd dot = gy.rowwise().sum();
                            s.add(x, gy - (y.array().colwise() * dot.array()).matrix());
                          });
}

Tensor cross_entropy_rows(const Tensor& probs, std::span<const int> targets,
                          std::span<const double> weights) {
  require_valid("cross_entropy_rows", probs);
  const Matrix& p = probs.value();
  const double total = check_targets("cross_entropy_rows", p, targets, weights);
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double pt = p(static_cast<Index>(i), targets[i]);
    if (!(pt > 0.0) || !std::isfinite(pt)) {
      throw NumericError("cross_entropy_rows: probability " + std::to_string(pt) + " at row " +
                         std::to_string(i));
    }
    loss -= (weights.empty() ? 1.0 : weights[i]) * std::log(pt);
  }
  std::vector<int> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return probs.tape()->record(
      "cross_entropy_rows", scalar_matrix(loss / total), {probs},
      [probs, t = std::move(t), w = std::move(w), total](const Matrix& g, GradSink& s) {
        Matrix grad = Matrix::Zero(probs.rows(), probs.cols());
        for (std::size_t i = 0; i < t.size(); ++i) {
          const Index r = static_cast<Index>(i);
          const double wi = w.empty() ? 1.0 : w[i];
          grad(r, t[i]) = -g(0, 0) * wi / (total * probs.value()(r, t[i]));
        }
        s.add(probs, grad);
      });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> targets,
                             std::span<const double> weights) {
  require_valid("softmax_cross_entropy", logits);
  const Matrix& z = logits.value();
  const double total = check_targets("softmax_cross_entropy", z, targets, weights);
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    if (!std::isfinite(m)) throw NumericError("softmax_cross_entropy: non-finite logit");
    probs.row(i) = (z.row(i).array() - m).exp().matrix();
    const double sum = probs.row(i).sum();
    probs.row(i) /= sum;
    const double lse = m + std::log(sum);
    const std::size_t u = static_cast<std::size_t>(i);
    loss += (weights.empty() ? 1.0 : weights[u]) * (lse - z(i, targets[u]));
  }
  std::vector<int> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return logits.tape()->record(
      "softmax_cross_entropy", scalar_matrix(loss / total), {logits},
      [logits, probs = std::move(probs), t = std::move(t), w = std::move(w), total](
          const Matrix& g, GradSink& s) {
        Matrix grad = probs;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const Index r = static_cast<Index>(i);
          grad(r, t[i]) -= 1.0;
          grad.row(r) *= (w.empty() ? 1.0 : w[i]) * g(0, 0) / total;
        }
        s.add(logits, grad);
      });
}

Tensor cosine_sim_matrix(const Tensor& p) {
  require_valid("cosine_sim_matrix", p);
  const Matrix& v = p.value();
  Eigen::VectorXd norms = v.rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0.0) || !std::isfinite(norms(i))) {
      throw NumericError("cosine_sim_matrix: row " + std::to_string(i) + " has zero norm");
    }
  }
  Matrix unit = (v.array().colwise() / norms.array()).matrix();
  Matrix out = unit * unit.transpose();
  return p.tape()->record("cosine_sim_matrix", std::move(out), {p},
                          [p, unit = std::move(unit), norms = std::move(norms)](const Matrix& g,
                                                                                 GradSink& s) {
                            Matrix d_unit = (g + g.transpose()) * unit;
                            Eigen::VectorXd radial = d_unit.cwiseProduct(unit).rowwise().sum();
                            Matrix d_p = d_unit - (unit.array().colwise() * radial.array()).matrix();
                            d_p.array().colwise() /= norms.array();
                            s.add(p, d_p);
                          });
}

Tensor off_diagonal_sum(const Tensor& x) {
  require_valid("off_diagonal_sum", x);
  if (x.rows() != x.cols()) throw ShapeError("off_diagonal_sum", "not square: " + shape_str(x.value()));
  const double v = x.value().sum() - x.value().trace();
  return x.tape()->record("off_diagonal_sum", scalar_matrix(v), {x},
                          [x](const Matrix& g, GradSink& s) {
                            Matrix grad = Matrix::Constant(x.rows(), x.cols(), g(0, 0));
                            grad.diagonal().setZero();
                            s.add(x, grad);
                          });
}

Tensor sum_all(const Tensor& x) {
  require_valid("sum_all", x);
  return x.tape()->record("sum_all", scalar_matrix(x.value().sum()), {x},
                          [x](const Matrix& g, GradSink& s) {
                            s.add(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
                          });
}

Tensor squared_norm(const Tensor& x) {
  require_valid("squared_norm", x);
  return x.tape()->record("squared_norm", scalar_matrix(x.value().squaredNorm()), {x},
                          [x](const Matrix& g, GradSink& s) { s.add(x, 2.0 * g(0, 0) * x.value()); });
}

Tensor scalar_combine(std::span<const std::pair<Tensor, double>> terms) {
  if (terms.empty()) throw ShapeError("scalar_combine", "no terms");
  double v = 0.0;
  std::vector<Tensor> inputs;
  std::vector<double> coeffs;
  for (const auto& [t, c] : terms) {
    require_same_tape("scalar_combine", terms[0].first, t);
    require_scalar("scalar_combine", t);
    v += c * t.scalar();
    inputs.push_back(t);
    coeffs.push_back(c);
  }
  Tape* tape = inputs[0].tape();
  return tape->record("scalar_combine", scalar_matrix(v), inputs,
                      [inputs, coeffs](const Matrix& g, GradSink& s) {
                        for (std::size_t k = 0; k < inputs.size(); ++k) {
                          if (coeffs[k] != 0.0) s.add(inputs[k], scalar_matrix(coeffs[k] * g(0, 0)));
                        }
                      });
}

}  // namespace dpgnn::ad
