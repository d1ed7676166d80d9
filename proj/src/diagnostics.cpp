#include "monoattn/diagnostics.hpp"

#include <cmath>
#include <vector>

namespace monoattn {

int stuckLimit(const DiagnosticsConfig& config, int dur_max, int reduction) {
  const int steps_per_token =
      (dur_max + reduction - 1) / reduction;  // ceil(dur_max / r)
  return config.stuck_factor * steps_per_token;
}

AlignmentDiagnostics diagnoseAlignment(const Eigen::MatrixXd& alignment,
                                       int n, int s_max,
                                       const DiagnosticsConfig& config,
                                       bool truncated) {
  AlignmentDiagnostics d;
  d.truncated = truncated;
  const int steps = static_cast<int>(alignment.rows());
  if (steps == 0) {
    d.covered = (n == 0);
    d.failed = true;
    return d;
  }

  std::vector<bool> hit(static_cast<std::size_t>(n), false);
  int prev_arg = -1;
  int run = 0;
  int diffuse_steps = 0;
  for (int t = 0; t < steps; ++t) {
    int arg = 0;
    double best = alignment(t, 0);
    for (int j = 1; j < n; ++j)
      if (alignment(t, j) >= best) {  // ties toward the larger index
        best = alignment(t, j);
        arg = j;
      }
    hit[static_cast<std::size_t>(arg)] = true;
    if (arg < prev_arg) d.regressed = true;
    run = (arg == prev_arg) ? run + 1 : 1;
    if (run > s_max) d.stuck = true;
    prev_arg = arg;
    if (best < config.diffuse_weight) ++diffuse_steps;
  }
  d.covered = true;
  for (bool h : hit)
    if (!h) d.covered = false;
  d.diffuse = diffuse_steps >
              config.diffuse_frac * static_cast<double>(steps);
  d.failed = !d.covered || d.regressed || d.stuck || d.diffuse || d.truncated;
  return d;
}

Eigen::MatrixXd goldStaircase(const std::vector<int>& gold_frame_to_token,
                              int n_tokens, int reduction) {
  const int total = static_cast<int>(gold_frame_to_token.size());
  const int steps = (total + reduction - 1) / reduction;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(steps, n_tokens);
  const double w = 1.0 / static_cast<double>(reduction);
  for (int t = 0; t < steps; ++t)
    for (int i = 0; i < reduction; ++i) {
      const int frame = std::min(t * reduction + i, total - 1);
      a(t, gold_frame_to_token[static_cast<std::size_t>(frame)]) += w;
    }
  return a;
}

}  // namespace monoattn
