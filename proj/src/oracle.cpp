#include "monoattn/oracle.hpp"

#include <string>

#include "monoattn/errors.hpp"

namespace monoattn::oracle {

namespace {

void checkGuard(int n_positions, int steps) {
  if (n_positions < 1) throw Error("oracle: need at least one position");
  if (steps < 0) throw Error("oracle: negative step count");
  if (steps > 20)
    throw Error("oracle: 2^" + std::to_string(steps) +
                " paths exceed the enumeration guard (2^20); use smaller "
                "instances");
}

}  // namespace

std::vector<std::vector<int>> enumeratePaths(int n_positions, int steps) {
  checkGuard(n_positions, steps);
  std::vector<std::vector<int>> paths;
  std::vector<int> current(static_cast<std::size_t>(steps) + 1, 0);
  // Each of the 2^steps advance/stay patterns, minus those leaving the grid.
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << steps); ++bits) {
    int pos = 0;
    bool ok = true;
    for (int t = 1; t <= steps; ++t) {
      pos += static_cast<int>((bits >> (t - 1)) & 1u);
      if (pos >= n_positions) {
        ok = false;
        break;
      }
      current[t] = pos;
    }
    if (ok) paths.push_back(current);
  }
  return paths;
}

double pathProbability(const std::vector<int>& path, const Trace& trace) {
  const int steps = static_cast<int>(path.size()) - 1;
  if (steps != trace.y.rows())
    throw Error("pathProbability: path length " + std::to_string(steps) +
                " does not match trace length " +
                std::to_string(trace.y.rows()));
  double prob = 1.0;
  for (int t = 1; t <= steps; ++t) {
    prob *= trace.y(t - 1, path[t]);
    if (trace.u) {
      const double u = (*trace.u)(t - 1);
      prob *= (path[t] == path[t - 1] + 1) ? u : (1.0 - u);
    }
  }
  return prob;
}

Eigen::MatrixXd bruteForceAlpha(const Trace& trace) {
  const int steps = static_cast<int>(trace.y.rows());
  const int n = static_cast<int>(trace.y.cols());
  checkGuard(n, steps);
  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(steps, n);
  for (int t = 1; t <= steps; ++t) {
    Trace prefix;
    prefix.y = trace.y.topRows(t);
    if (trace.u) prefix.u = trace.u->head(t);
    for (const auto& path : enumeratePaths(n, t))
      alpha(t - 1, path[t]) += pathProbability(path, prefix);
    const double z = alpha.row(t - 1).sum();
    if (z > 0.0) alpha.row(t - 1) /= z;
  }
  return alpha;
}

long pathCountDp(int n_positions, int steps) {
  checkGuard(n_positions, steps);
  // R(n, t) = R(n, t-1) + R(n-1, t-1), R(first, 0) = 1.
  std::vector<long> reach(static_cast<std::size_t>(n_positions), 0);
  reach[0] = 1;
  for (int t = 1; t <= steps; ++t)
    for (int pos = n_positions - 1; pos >= 1; --pos) reach[pos] += reach[pos - 1];
  long total = 0;
  for (long r : reach) total += r;
  return total;
}

}  // namespace monoattn::oracle
