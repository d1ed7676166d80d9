#include "monoattn/verify.hpp"

#include <cmath>

namespace monoattn {

oracle::Trace randomTrace(Rng& rng, int n, int steps, bool with_u) {
  oracle::Trace trace;
  trace.y.resize(steps, n);
  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd e(n);
    for (int j = 0; j < n; ++j) e(j) = rng.normal();
    Eigen::VectorXd y = (e.array() - e.maxCoeff()).exp();
    trace.y.row(t) = (y / y.sum()).transpose();
  }
  if (with_u) {
    Eigen::VectorXd u(steps);
    for (int t = 0; t < steps; ++t) u(t) = rng.uniform(0.05, 0.95);
    trace.u = u;
  }
  return trace;
}

OracleCheckResult oracleCheck(int trials, int max_n, int max_t,
                              std::uint64_t seed) {
  Rng rng(seed);
  OracleCheckResult result;
  result.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = rng.uniformInt(1, max_n);
    const int steps = rng.uniformInt(1, max_t);
    for (bool with_u : {false, true}) {
      const oracle::Trace trace = randomTrace(rng, n, steps, with_u);
      const Eigen::MatrixXd expected = oracle::bruteForceAlpha(trace);
      const Eigen::MatrixXd got = attn::runForwardRecursion(trace.y, trace.u);
      result.max_deviation = std::max(
          result.max_deviation, (expected - got).cwiseAbs().maxCoeff());
    }
  }
  return result;
}

ModelConfig miniatureConfig(attn::Mechanism m, attn::Stabilizer s) {
  ModelConfig c;
  c.vocab = 4;
  c.embed_width = 8;
  c.enc_width = 8;
  c.dec_width = 8;
  c.attn_width = 8;
  c.agent_hidden = 8;
  c.frame_width = 5;
  c.reduction = 2;
  c.mechanism = m;
  c.stabilizer = s;
  c.seed = 42;
  return c;
}

std::vector<GradCheckCase> gradCheckAllConfigs(
    double fd_step, const std::function<void(ad::ParameterStore&)>& tweak) {
  // Fixed miniature sample: 3 tokens, 4 target frames.
  const std::vector<int> tokens = {0, 1, 2};
  const std::vector<int> durations = {2, 1, 1};
  const Eigen::MatrixXd patterns = patternTable(4, 5, /*pattern_seed=*/3);
  const Eigen::MatrixXd frames = renderFrames(tokens, durations, patterns);

  std::vector<GradCheckCase> cases;
  for (attn::Mechanism m : {attn::Mechanism::kBaseline,
                            attn::Mechanism::kForward,
                            attn::Mechanism::kForwardTa})
    for (attn::Stabilizer s : {attn::Stabilizer::kNone,
                               attn::Stabilizer::kWindow,
                               attn::Stabilizer::kConv}) {
      GradCheckCase c;
      c.config = miniatureConfig(m, s);
      Seq2SeqModel model(c.config);
      auto builder = [&](ad::Tape& tape, ad::ParameterStore&) {
        return model.teacherForced(tape, tokens, frames).loss;
      };
      c.report = ad::finiteDiffCheck(builder, model.params(), fd_step, tweak);
      cases.push_back(std::move(c));
    }
  return cases;
}

}  // namespace monoattn
