#include "monoattn/attention.hpp"

#include <algorithm>

namespace monoattn::attn {

using ad::Var;

Mechanism mechanismFromString(const std::string& s) {
  if (s == "baseline") return Mechanism::kBaseline;
  if (s == "fa") return Mechanism::kForward;
  if (s == "fa-ta") return Mechanism::kForwardTa;
  throw ConfigError("unknown mechanism '" + s +
                    "' (expected baseline | fa | fa-ta)");
}

Stabilizer stabilizerFromString(const std::string& s) {
  if (s == "none") return Stabilizer::kNone;
  if (s == "window") return Stabilizer::kWindow;
  if (s == "conv") return Stabilizer::kConv;
  throw ConfigError("unknown stabilizer '" + s +
                    "' (expected none | window | conv)");
}

Feedback feedbackFromString(const std::string& s) {
  if (s == "emitted") return Feedback::kEmitted;
  if (s == "content") return Feedback::kContent;
  throw ConfigError("unknown feedback '" + s +
                    "' (expected emitted | content)");
}

std::string name(Mechanism m) {
  switch (m) {
    case Mechanism::kBaseline: return "baseline";
    case Mechanism::kForward: return "fa";
    case Mechanism::kForwardTa: return "fa-ta";
  }
  return "?";
}

std::string name(Stabilizer s) {
  switch (s) {
    case Stabilizer::kNone: return "none";
    case Stabilizer::kWindow: return "window";
    case Stabilizer::kConv: return "conv";
  }
  return "?";
}

std::string name(Feedback f) {
  return f == Feedback::kEmitted ? "emitted" : "content";
}

int argmaxTieHigh(const ad::Matrix& weights) {
  int best = 0;
  for (int i = 1; i < weights.rows(); ++i)
    if (weights(i, 0) >= weights(best, 0)) best = i;
  return best;
}

Window windowAround(const ad::Matrix& prev_align, int half_width) {
  const int center = argmaxTieHigh(prev_align);
  const int n = static_cast<int>(prev_align.rows());
  Window w;
  w.lo = std::max(0, center - half_width);
  w.hi = std::min(n - 1, center + half_width);
  return w;
}

Var projectMemory(Var x, const AttentionVars& p) {
  return x * p.memory_w;  // N x d_att
}

Var energiesFromMemory(Var query, Var memory, const AttentionVars& p,
                       Var conv_feats) {
  if (p.hasConv() != conv_feats.valid())
    throw Error(
        "energies: convolutional features must be supplied exactly when the "
        "attention has conv parameters");
  Var shift = p.query_w * query + p.bias;  // d_att
  Var pre = rowwisePlus(memory, shift);
  if (conv_feats.valid()) pre = pre + conv_feats * p.conv_u;
  return ad::tanh(pre) * p.score_v;  // N
}

Var energies(Var query, Var x, const AttentionVars& p, Var conv_feats) {
  return energiesFromMemory(query, projectMemory(x, p), p, conv_feats);
}

Var normalize(Var e, std::optional<Window> window) {
  if (!window) return ad::softmax(e);
  return ad::windowedSoftmax(e, window->lo, window->hi);
}

Var convFeatures(Var prev_align, Var kernels) {
  return ad::conv1dSame(prev_align, kernels);
}

Var context(Var weights, Var x) {
  return ad::matmulTN(x, weights);  // d_x
}

ForwardState ForwardState::initial(ad::Tape& tape, int n, bool with_agent) {
  ForwardState s;
  s.alpha = tape.oneHot(n, 0);
  if (with_agent) s.u = tape.scalar(0.5);
  s.t = 0;
  return s;
}

namespace {

// Renormalization shared by both recursions. The 1e-30 inside the division
// only guards against rounding underflow after many steps; an exact zero sum
// means the window annihilated the reachable support and is an error.
Var renormalize(Var alpha_unnorm, const char* op) {
  Var z = ad::sum(alpha_unnorm);
  if (z.scalarValue() == 0.0)
    throw DegenerateAttentionError(
        std::string(op) +
        ": all forward mass annihilated; widen the attention window");
  return ad::divideBy(alpha_unnorm, z, 1e-30);
}

}  // namespace

std::pair<Var, ForwardState> forwardStep(const ForwardState& state, Var y) {
  if (y.rows() != state.alpha.rows())
    throw ShapeError("forward_step: y length " + std::to_string(y.rows()) +
                     " != state length " + std::to_string(state.alpha.rows()));
  Var reach = state.alpha + ad::shiftDown(state.alpha);
  Var alpha_hat = renormalize(cwiseProduct(reach, y), "forward_step");
  ForwardState next;
  next.alpha = alpha_hat;
  next.t = state.t + 1;
  return {alpha_hat, next};
}

std::pair<Var, ForwardState> forwardTaStep(const ForwardState& state, Var y) {
  if (!state.u.valid())
    throw Error("forward_ta_step: state carries no transition probability");
  if (y.rows() != state.alpha.rows())
    throw ShapeError("forward_ta_step: y length " + std::to_string(y.rows()) +
                     " != state length " + std::to_string(state.alpha.rows()));
  Var stay = scaleBy(state.alpha, affine(state.u, -1.0, 1.0));
  Var advance = scaleBy(ad::shiftDown(state.alpha), state.u);
  Var alpha_hat =
      renormalize(cwiseProduct(stay + advance, y), "forward_ta_step");
  ForwardState next;
  next.alpha = alpha_hat;
  next.t = state.t + 1;
  return {alpha_hat, next};
}

Var transitionProb(Var context, Var prev_frame, Var query,
                   const AgentVars& agent, double bias) {
  Var in = ad::vconcat({context, prev_frame, query});
  Var hidden = ad::tanh(agent.w1 * in + agent.b1);
  Var logit = agent.w2 * hidden + agent.b2;
  if (bias != 0.0) logit = affine(logit, 1.0, bias);
  return ad::logistic(logit);
}

Eigen::MatrixXd runForwardRecursion(const Eigen::MatrixXd& y,
                                    const std::optional<Eigen::VectorXd>& u) {
  const int steps = static_cast<int>(y.rows());
  const int n = static_cast<int>(y.cols());
  ad::Tape tape(/*track_gradients=*/false);
  ForwardState state = ForwardState::initial(tape, n, u.has_value());
  Eigen::MatrixXd alpha(steps, n);
  for (int t = 0; t < steps; ++t) {
    Var yt = tape.constant(y.row(t).transpose());
    Var emitted;
    if (u) {
      state.u = tape.scalar((*u)(t));
      std::tie(emitted, state) = forwardTaStep(state, yt);
    } else {
      std::tie(emitted, state) = forwardStep(state, yt);
    }
    alpha.row(t) = emitted.value().col(0);
  }
  return alpha;
}

Eigen::MatrixXd runForwardRecursionEndNormalized(
    const Eigen::MatrixXd& y, const std::optional<Eigen::VectorXd>& u) {
  const int steps = static_cast<int>(y.rows());
  const int n = static_cast<int>(y.cols());
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  alpha(0) = 1.0;
  Eigen::MatrixXd out(steps, n);
  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd shifted = Eigen::VectorXd::Zero(n);
    if (n > 1) shifted.tail(n - 1) = alpha.head(n - 1);
    const double stay = u ? 1.0 - (*u)(t) : 1.0;
    const double advance = u ? (*u)(t) : 1.0;
    alpha = ((stay * alpha + advance * shifted).array() *
             y.row(t).transpose().array())
                .matrix();
    const double z = alpha.sum();
    out.row(t) = (z > 0.0 ? (alpha / z).eval() : alpha).transpose();
  }
  return out;
}

}  // namespace monoattn::attn
