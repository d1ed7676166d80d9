#pragma once

#include <Eigen/Dense>

namespace monoattn {

// Thresholds for the automated failure flags. Calibrated so that gold
// staircase alignments of the default task always pass; exposed as config
// tunables.
struct DiagnosticsConfig {
  double diffuse_weight = 0.1;  // a step is diffuse when max weight < this
  double diffuse_frac = 0.2;    // diffuse flag when > this fraction of steps
  int stuck_factor = 4;         // S_max = stuck_factor * ceil(dur_max / r)
};

// Algorithmic stand-in for the human failure labeling: coverage (missing
// tokens), regression (repeats), stuck, and diffuse alignments.
struct AlignmentDiagnostics {
  bool covered = false;
  bool regressed = false;
  bool stuck = false;
  bool diffuse = false;
  bool truncated = false;
  bool failed = false;
};

// `alignment` is T' x N with simplex rows; `s_max` the longest allowed
// constant-argmax run; `truncated` whether synthesis hit its step budget.
// Argmax ties break toward the larger index.
AlignmentDiagnostics diagnoseAlignment(const Eigen::MatrixXd& alignment,
                                       int n, int s_max,
                                       const DiagnosticsConfig& config,
                                       bool truncated = false);

// Longest allowed constant-argmax run for a task/model combination.
int stuckLimit(const DiagnosticsConfig& config, int dur_max, int reduction);

// Gold staircase as an alignment matrix: row t distributes weight over the
// tokens owning the r frames of decoder step t.
Eigen::MatrixXd goldStaircase(const std::vector<int>& gold_frame_to_token,
                              int n_tokens, int reduction);

}  // namespace monoattn
