#include "monoattn/adam.hpp"

#include <cmath>

namespace monoattn::ad {

void Adam::step(ParameterStore& params) {
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (auto& [name, p] : params.entries()) {
    if (!p.hasGrad())
      throw Error("adam_step: missing gradient for parameter '" + name + "'");
    Moments& mom = moments_[name];
    if (mom.m.size() == 0) {
      mom.m = Matrix::Zero(p.value.rows(), p.value.cols());
      mom.v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    mom.m = config_.beta1 * mom.m + (1.0 - config_.beta1) * p.grad;
    mom.v = config_.beta2 * mom.v.array().matrix() +
            (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
    const auto m_hat = mom.m.array() / bc1;
    const auto v_hat = mom.v.array() / bc2;
    p.value.array() -=
        config_.lr * m_hat / (v_hat.sqrt() + config_.epsilon);
  }
}

}  // namespace monoattn::ad
