#pragma once

#include <functional>
#include <map>
#include <string>

#include "monoattn/params.hpp"

namespace monoattn::ad {

// Builds a scalar loss graph from the current parameter values. Must be
// deterministic: two calls with identical parameters produce identical
// losses.
using GraphBuilder = std::function<Var(Tape&, ParameterStore&)>;

struct GradCheckReport {
  // max over coordinates of |analytic - central| / max(|analytic|,
  // |central|, 1e-8), per parameter
  std::map<std::string, double> max_rel_error;
  double worst = 0.0;
  std::string worst_param;

  bool passes(double tol) const { return worst < tol; }
};

// Central-difference check of analytic gradients, coordinate by coordinate.
// `after_backward` is a test hook run on the freshly populated analytic
// gradients (fault injection for checking the checker).
GradCheckReport finiteDiffCheck(
    const GraphBuilder& build, ParameterStore& params, double step = 1e-5,
    const std::function<void(ParameterStore&)>& after_backward = nullptr);

}  // namespace monoattn::ad
