#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace monoattn::oracle {

// Per-step attention record for a whole decoded sequence. Row t of `y` is
// the content-attention simplex at step t+1; u(t) is the transition
// probability consumed at step t+1 (u_0 first).
struct Trace {
  Eigen::MatrixXd y;                 // T x N
  std::optional<Eigen::VectorXd> u;  // length T
};

// Monotonic-continuous alignment paths over 0-based encoder positions:
// path[0] = 0 and each step moves by 0 or +1 without exceeding n_positions.
// path.size() == steps + 1.
std::vector<std::vector<int>> enumeratePaths(int n_positions, int steps);

// Product of attended probabilities along the path, times the transition
// factors (u on an advance, 1-u on a stay) when the trace carries them.
double pathProbability(const std::vector<int>& path, const Trace& trace);

// T x N matrix of row-normalized forward variables computed by exhaustive
// path enumeration. Never used in training; this is the ground truth the
// recursions are checked against.
Eigen::MatrixXd bruteForceAlpha(const Trace& trace);

// Path count by dynamic programming, for cross-checking the enumeration.
long pathCountDp(int n_positions, int steps);

}  // namespace monoattn::oracle
