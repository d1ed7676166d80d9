#include "monoattn/grad_check.hpp"

#include <cmath>

namespace monoattn::ad {

namespace {

double evalScalar(const GraphBuilder& build, ParameterStore& params,
                  const std::string& at) {
  Tape tape(/*track_gradients=*/false);
  Var loss = build(tape, params);
  if (loss.rows() != 1 || loss.cols() != 1)
    throw ShapeError("finite_diff_check: builder returned a non-scalar loss");
  const double v = loss.scalarValue();
  if (!std::isfinite(v))
    throw NumericalError("finite_diff_check: non-finite loss while perturbing " +
                         at);
  return v;
}

}  // namespace

GradCheckReport finiteDiffCheck(
    const GraphBuilder& build, ParameterStore& params, double step,
    const std::function<void(ParameterStore&)>& after_backward) {
  if (step <= 0.0) throw Error("finite_diff_check: step must be positive");

  params.zeroGrad();
  {
    Tape tape;
    Var loss = build(tape, params);
    if (loss.rows() != 1 || loss.cols() != 1)
      throw ShapeError(
          "finite_diff_check: builder returned a non-scalar loss");
    if (!std::isfinite(loss.scalarValue()))
      throw NumericalError(
          "finite_diff_check: non-finite loss at the evaluation point");
    tape.backward(loss);
    if (after_backward) after_backward(params);
  }

  GradCheckReport report;
  for (auto& [name, p] : params.entries()) {
    const Matrix analytic =
        p.hasGrad() ? p.grad : Matrix::Zero(p.value.rows(), p.value.cols());
    double worst = 0.0;
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        const std::string at = name + "[" + std::to_string(r) + "," +
                               std::to_string(c) + "]";
        const double old = p.value(r, c);
        p.value(r, c) = old + step;
        const double up = evalScalar(build, params, at);
        p.value(r, c) = old - step;
        const double down = evalScalar(build, params, at);
        p.value(r, c) = old;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic(r, c);
        const double rel = std::abs(a - numeric) /
                           std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, rel);
      }
    report.max_rel_error[name] = worst;
    if (worst >= report.worst) {
      report.worst = worst;
      report.worst_param = name;
    }
  }
  return report;
}

}  // namespace monoattn::ad
