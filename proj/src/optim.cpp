#include "dpgnn/optim.hpp"

#include "dpgnn/error.hpp"

#include <cmath>

namespace dpgnn {

void Adam::step(std::span<ad::Parameter* const> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step", std::to_string(params.size()) + " parameters but " +
                                      std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = params[i]->value;
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols()) {
      throw ShapeError("adam_step", "gradient shape mismatch for " + params[i]->name);
    }
    if (!grads[i].allFinite()) {
      throw NumericError("adam_step: non-finite gradient for " + params[i]->name);
    }
  }
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("adam_step", "parameter list changed between steps");
  }

  ++t_;
  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double step_size = params[i]->learning_rate.value_or(cfg_.learning_rate) / bias1;
    Matrix& p = params[i]->value;
    Matrix g = grads[i];
    if (params[i]->weight_decay != 0.0) g += params[i]->weight_decay * p;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    p.array() -= step_size * m_[i].array() / ((v_[i].array() / bias2).sqrt() + cfg_.epsilon);
  }
}

}  // namespace dpgnn
