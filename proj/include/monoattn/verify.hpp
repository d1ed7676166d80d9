#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "monoattn/grad_check.hpp"
#include "monoattn/model.hpp"
#include "monoattn/oracle.hpp"

namespace monoattn {

// Randomized equivalence check of the forward recursions against the
// brute-force path oracle: max absolute deviation over `trials` random
// traces (both the plain and the transition-agent recursion per trace).
struct OracleCheckResult {
  int trials = 0;
  double max_deviation = 0.0;
};
OracleCheckResult oracleCheck(int trials, int max_n, int max_t,
                              std::uint64_t seed);

// Random attention trace: T x N simplex rows, plus transition probabilities.
oracle::Trace randomTrace(Rng& rng, int n, int steps, bool with_u);

// Miniature end-to-end configuration for gradient checking (tiny widths so
// the coordinate sweep stays fast).
ModelConfig miniatureConfig(attn::Mechanism m, attn::Stabilizer s);

struct GradCheckCase {
  ModelConfig config;
  ad::GradCheckReport report;
};

// Finite-difference check of the full teacher-forced loss for every
// mechanism x stabilizer combination. `tweak` (test fixture) perturbs the
// analytic gradients after backward, to confirm the checker flags faults.
std::vector<GradCheckCase> gradCheckAllConfigs(
    double fd_step = 1e-5,
    const std::function<void(ad::ParameterStore&)>& tweak = nullptr);

}  // namespace monoattn
