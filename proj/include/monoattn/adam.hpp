#pragma once

#include <map>
#include <string>

#include "monoattn/params.hpp"

namespace monoattn::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard Adam with bias correction. Gradients are read, never modified;
// the caller zeroes them after the step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParameterStore& params);
  long stepCount() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    Matrix m, v;
  };
  AdamConfig config_;
  std::map<std::string, Moments> moments_;
  long step_ = 0;
};

}  // namespace monoattn::ad
