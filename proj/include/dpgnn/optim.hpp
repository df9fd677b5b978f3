#pragma once

#include "dpgnn/autodiff.hpp"

#include <span>
#include <vector>

namespace dpgnn {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with an L2 term (weight_decay * param) folded into the gradient before
// the moment update, per parameter. A parameter's own learning_rate, when set,
// replaces the configured one.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // grads[i] belongs to params[i]. The parameter list must keep the same
  // order and shapes across calls. Throws NumericError on a non-finite
  // gradient and ShapeError on a shape mismatch; no parameter is touched then.
  void step(std::span<ad::Parameter* const> params, std::span<const Matrix> grads);

  long steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace dpgnn
