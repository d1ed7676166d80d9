#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "monoattn/oracle.hpp"
#include "monoattn/rng.hpp"
#include "monoattn/verify.hpp"

using namespace monoattn;

TEST_CASE("path enumeration matches hand listings") {
  // N=2, T=2: exactly (0,0,0), (0,0,1), (0,1,1) in 0-based indices
  auto paths = oracle::enumeratePaths(2, 2);
  std::set<std::vector<int>> got(paths.begin(), paths.end());
  std::set<std::vector<int>> expected = {
      {0, 0, 0}, {0, 0, 1}, {0, 1, 1}};
  CHECK(got == expected);

  // N=3, T=3: 2^3 step patterns minus the one exceeding the grid
  CHECK(oracle::enumeratePaths(3, 3).size() == 7);

  // N=1: a single all-zero path for any T
  for (int steps : {0, 1, 5, 9}) {
    auto only = oracle::enumeratePaths(1, steps);
    REQUIRE(only.size() == 1);
    CHECK(std::all_of(only[0].begin(), only[0].end(),
                      [](int v) { return v == 0; }));
  }
}

TEST_CASE("paths satisfy the monotonic-continuous invariants") {
  for (int n : {1, 2, 4, 6})
    for (int steps : {0, 1, 3, 6}) {
      for (const auto& path : oracle::enumeratePaths(n, steps)) {
        REQUIRE(path.size() == static_cast<std::size_t>(steps) + 1);
        CHECK(path[0] == 0);
        for (std::size_t t = 1; t < path.size(); ++t) {
          const int d = path[t] - path[t - 1];
          CHECK((d == 0 || d == 1));
          CHECK(path[t] < n);
        }
      }
    }
}

TEST_CASE("enumeration count agrees with the DP recurrence") {
  for (int n : {1, 2, 3, 5, 6})
    for (int steps : {0, 1, 2, 4, 7, 8})
      CHECK(static_cast<long>(oracle::enumeratePaths(n, steps).size()) ==
            oracle::pathCountDp(n, steps));
}

TEST_CASE("enumeration guard rejects huge instances") {
  CHECK_THROWS_AS(oracle::enumeratePaths(4, 21), Error);
}

TEST_CASE("path probability hand cases") {
  oracle::Trace trace;
  trace.y.resize(2, 2);
  trace.y << 0.6, 0.4, 0.7, 0.3;

  // (1,1,2) in the paper's 1-based indexing = (0,0,1) here
  CHECK(oracle::pathProbability({0, 0, 1}, trace) ==
        doctest::Approx(0.6 * 0.3).epsilon(1e-15));

  // Transition weights: stay at step 1 (1-u0), advance at step 2 (u1)
  trace.u = (Eigen::VectorXd(2) << 0.5, 0.5).finished();
  CHECK(oracle::pathProbability({0, 0, 1}, trace) ==
        doctest::Approx(0.18 * 0.5 * 0.5).epsilon(1e-15));

  // Annihilation whenever some attended probability is zero
  oracle::Trace zeroed;
  zeroed.y.resize(2, 3);
  zeroed.y << 0.0, 1.0, 0.0, 0.2, 0.5, 0.3;
  CHECK(oracle::pathProbability({0, 0, 0}, zeroed) == 0.0);
}

TEST_CASE("brute-force alpha hand cases") {
  oracle::Trace trace;
  trace.y.resize(2, 2);
  trace.y << 0.6, 0.4, 0.7, 0.3;
  const Eigen::MatrixXd alpha = oracle::bruteForceAlpha(trace);
  // unnormalized second row [0.42, 0.30]
  CHECK(alpha(1, 0) == doctest::Approx(0.42 / 0.72).epsilon(1e-12));
  CHECK(alpha(1, 1) == doctest::Approx(0.30 / 0.72).epsilon(1e-12));

  // one step: reachable support is the first two positions
  oracle::Trace one;
  one.y.resize(1, 4);
  one.y << 0.1, 0.2, 0.3, 0.4;
  const Eigen::MatrixXd a1 = oracle::bruteForceAlpha(one);
  CHECK(a1(0, 0) == doctest::Approx(0.1 / 0.3).epsilon(1e-12));
  CHECK(a1(0, 1) == doctest::Approx(0.2 / 0.3).epsilon(1e-12));
  CHECK(a1(0, 2) == 0.0);
  CHECK(a1(0, 3) == 0.0);

  // single position: every row is [1]
  Rng rng(3);
  oracle::Trace single = randomTrace(rng, 1, 5, false);
  const Eigen::MatrixXd as = oracle::bruteForceAlpha(single);
  for (int t = 0; t < 5; ++t) CHECK(as(t, 0) == doctest::Approx(1.0));
}

TEST_CASE("brute-force rows are simplexes") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniformInt(1, 6);
    const int steps = rng.uniformInt(1, 8);
    const auto trace = randomTrace(rng, n, steps, trial % 2 == 0);
    const Eigen::MatrixXd alpha = oracle::bruteForceAlpha(trace);
    for (int t = 0; t < steps; ++t) {
      CHECK(std::abs(alpha.row(t).sum() - 1.0) < 1e-12);
      CHECK(alpha.row(t).minCoeff() >= 0.0);
    }
  }
}
