// Acceptance suite: one pass/fail line per criterion, exit 0 only when all
// criteria hold. Criteria 6-8 train real models and dominate the runtime;
// they reuse one pool of training runs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "monoattn/artifacts.hpp"
#include "monoattn/config.hpp"
#include "monoattn/experiments.hpp"
#include "monoattn/verify.hpp"

using namespace monoattn;

namespace {

struct CriterionResult {
  int number = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CriterionResult> g_results;

void record(int number, const std::string& name, bool pass,
            const std::string& detail) {
  g_results.push_back({number, name, pass, detail});
  std::cerr << "[criterion " << number << "] " << (pass ? "pass" : "FAIL")
            << " - " << detail << "\n";
}

double seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- criteria 1-3, 5: recursion equivalences and invariants -------------

void criterion1() {
  const auto start = std::chrono::steady_clock::now();
  OracleCheckResult r = oracleCheck(/*trials=*/120, /*max_n=*/6, /*max_t=*/8,
                                    /*seed=*/20240811);
  const double elapsed = seconds(start);
  std::ostringstream os;
  os << "oracle equivalence: max deviation " << formatG9(r.max_deviation)
     << " over " << r.trials << " traces (tol 1e-9), " << formatG9(elapsed)
     << " s";
  record(1, "oracle-equivalence", r.max_deviation < 1e-9 && elapsed < 10.0,
         os.str());
}

void criterion2() {
  Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniformInt(1, 6);
    const int steps = rng.uniformInt(1, 8);
    const oracle::Trace trace = randomTrace(rng, n, steps, false);
    const Eigen::MatrixXd plain = attn::runForwardRecursion(trace.y);
    const Eigen::VectorXd half = Eigen::VectorXd::Constant(steps, 0.5);
    const Eigen::MatrixXd with_agent =
        attn::runForwardRecursion(trace.y, half);
    worst = std::max(worst, (plain - with_agent).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "constant-agent reduction: max |fa-ta(0.5) - fa| = "
     << formatG9(worst) << " over 50 traces (tol 1e-12)";
  record(2, "constant-agent-reduction", worst <= 1e-12, os.str());
}

void criterion3() {
  Rng rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniformInt(1, 6);
    const int steps = rng.uniformInt(1, 8);
    const bool with_u = trial % 2 == 0;
    const oracle::Trace trace = randomTrace(rng, n, steps, with_u);
    const Eigen::MatrixXd stepwise =
        attn::runForwardRecursion(trace.y, trace.u);
    const Eigen::MatrixXd once =
        attn::runForwardRecursionEndNormalized(trace.y, trace.u);
    worst = std::max(worst, (stepwise - once).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "normalization timing: max deviation " << formatG9(worst)
     << " over 50 seeds (tol 1e-9)";
  record(3, "normalization-timing", worst < 1e-9, os.str());
}

void criterion5() {
  Rng rng(707);
  long violations = 0;
  const int kTrials = 10000;
  for (int trial = 0; trial < kTrials; ++trial) {
    const int n = rng.uniformInt(1, 7);
    const int steps = rng.uniformInt(1, 9);
    const bool with_u = trial % 2 == 0;
    const oracle::Trace trace = randomTrace(rng, n, steps, with_u);
    const Eigen::MatrixXd alpha = attn::runForwardRecursion(trace.y, trace.u);
    int prev_min = 0;
    for (int t = 0; t < steps; ++t) {
      if (std::abs(alpha.row(t).sum() - 1.0) >= 1e-9) ++violations;
      if (alpha.row(t).minCoeff() < 0.0) ++violations;
      for (int j = t + 2; j < n; ++j)
        if (alpha(t, j) != 0.0) ++violations;
      int min_support = n;
      for (int j = 0; j < n; ++j)
        if (alpha(t, j) > 0.0) {
          min_support = j;
          break;
        }
      if (min_support < prev_min) ++violations;
      prev_min = min_support;
    }
    // windowed softmax zeroing
    {
      const int center = rng.uniformInt(0, n - 1);
      const int w = rng.uniformInt(0, 2);
      ad::Tape t;
      Eigen::MatrixXd e(n, 1);
      for (int j = 0; j < n; ++j) e(j, 0) = rng.normal() * 3.0;
      ad::Var y = ad::windowedSoftmax(t.constant(e), center - w, center + w);
      for (int j = 0; j < n; ++j) {
        const bool inside = j >= center - w && j <= center + w;
        if (!inside && y.value()(j, 0) != 0.0) ++violations;
      }
    }
  }
  std::ostringstream os;
  os << "structural invariants: " << violations << " violations in "
     << kTrials << " randomized trials";
  record(5, "structural-invariants", violations == 0, os.str());
}

// ---- criterion 4: end-to-end gradient fidelity --------------------------

void criterion4() {
  const auto start = std::chrono::steady_clock::now();
  bool pass = true;
  double worst = 0.0;
  std::string worst_case;
  for (const GradCheckCase& c : gradCheckAllConfigs()) {
    if (c.report.worst > worst) {
      worst = c.report.worst;
      worst_case = attn::name(c.config.mechanism) + "/" +
                   attn::name(c.config.stabilizer) + " (" +
                   c.report.worst_param + ")";
    }
    pass = pass && c.report.passes(1e-4);
  }
  const double elapsed = seconds(start);
  std::ostringstream os;
  os << "gradient fidelity: worst rel error " << formatG9(worst) << " at "
     << worst_case << " across 9 configs (tol 1e-4), " << formatG9(elapsed)
     << " s";
  record(4, "gradient-fidelity", pass && elapsed < 120.0, os.str());
}

// ---- criteria 6-8: trained-model experiments -----------------------------

struct TrainedRun {
  attn::Mechanism mechanism;
  attn::Stabilizer stabilizer;
  std::uint64_t seed = 0;
  double epochs_to_stable = 0.0;
  int failed = 0;  // stability failures on the test split
};

struct TrainingPool {
  std::vector<TrainedRun> runs;
  SweepResult sweep;  // from the best fa-ta model

  std::vector<double> metric(attn::Mechanism m, attn::Stabilizer s,
                             bool stability) const {
    std::vector<double> out;
    for (const auto& r : runs)
      if (r.mechanism == m && r.stabilizer == s)
        out.push_back(stability ? static_cast<double>(r.failed)
                                : r.epochs_to_stable);
    return out;
  }
};

TrainingPool runTrainingPool(const std::filesystem::path& out_dir) {
  const RunConfig defaults;
  const TaskConfig task = defaults.taskConfig();
  const Dataset data = makeDataset(task);
  TrainOptions options = defaults.trainOptions();

  struct Job {
    attn::Mechanism m;
    attn::Stabilizer s;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  const std::vector<std::pair<attn::Mechanism, attn::Stabilizer>> configs = {
      {attn::Mechanism::kBaseline, attn::Stabilizer::kNone},
      {attn::Mechanism::kForward, attn::Stabilizer::kNone},
      {attn::Mechanism::kForwardTa, attn::Stabilizer::kNone},
      {attn::Mechanism::kForward, attn::Stabilizer::kConv},
  };
  for (const auto& [m, s] : configs)
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
      jobs.push_back({m, s, seed});

  TrainingPool pool;
  pool.runs.resize(jobs.size());
  // One trained fa-ta model is kept for the speed sweep: the seed with the
  // fewest stability failures (ties to the smaller seed).
  struct Kept {
    std::unique_ptr<Seq2SeqModel> model;
    int failed = 1 << 30;
    std::uint64_t seed = ~0ull;
  } kept;

  std::atomic<std::size_t> next{0};
  std::mutex kept_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      ModelConfig mc = defaults.modelConfig();
      mc.mechanism = job.m;
      mc.stabilizer = job.s;
      mc.seed = job.seed;
      auto model = std::make_unique<Seq2SeqModel>(mc);
      const auto start = std::chrono::steady_clock::now();
      RunMetrics metrics = trainModel(*model, data, options);
      StabilityResult stability = stabilityEval(*model, data.test, options);
      std::cerr << "  trained " << attn::name(job.m) << "/"
                << attn::name(job.s) << " seed " << job.seed << ": "
                << stability.failed << "/" << data.test.size()
                << " failed, epochs-to-stable "
                << (std::isinf(metrics.epochs_to_stable)
                        ? std::string("inf")
                        : std::to_string(metrics.epochs_to_stable))
                << ", " << formatG9(seconds(start)) << " s\n";
      pool.runs[i] = {job.m, job.s, job.seed, metrics.epochs_to_stable,
                      stability.failed};
      if (job.m == attn::Mechanism::kForwardTa) {
        std::lock_guard<std::mutex> lock(kept_mutex);
        if (stability.failed < kept.failed ||
            (stability.failed == kept.failed && job.seed < kept.seed)) {
          kept.model = std::move(model);
          kept.failed = stability.failed;
          kept.seed = job.seed;
        }
      }
    }
  };
  const int jobs_n = std::max(1u, std::thread::hardware_concurrency());
  if (jobs_n == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs_n; ++j) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  // Artifacts: partial stability grid and the convergence table.
  StabilityGrid grid;
  for (const auto& [m, s] : configs) {
    const auto vals = pool.metric(m, s, true);
    grid.cell[static_cast<int>(m)][static_cast<int>(s)] =
        static_cast<int>(median(vals));
  }
  writeLines(stabilityGridCsv(grid), out_dir / "stability_grid.csv");
  std::vector<ConvergenceRow> conv_rows;
  for (const auto& r : pool.runs)
    conv_rows.push_back(
        {r.mechanism, r.stabilizer, r.seed, r.epochs_to_stable});
  writeLines(convergenceCsv(conv_rows), out_dir / "convergence.csv");

  if (kept.model) {
    kept.model->params().save(out_dir / "fa_ta_ckpt.txt");
    pool.sweep = speedSweep(*kept.model, data.test, 0.6, 0.2, options);
    writeLines(speedSweepCsv(pool.sweep.rows), out_dir / "speed_sweep.csv");
  }
  return pool;
}

void criteria678(const TrainingPool& pool) {
  using attn::Mechanism;
  using attn::Stabilizer;
  // criterion 6: stability ordering
  {
    const double baseline =
        median(pool.metric(Mechanism::kBaseline, Stabilizer::kNone, true));
    const double fa =
        median(pool.metric(Mechanism::kForward, Stabilizer::kNone, true));
    const double fa_conv =
        median(pool.metric(Mechanism::kForward, Stabilizer::kConv, true));
    std::ostringstream os;
    os << "stability ordering: median failures baseline-plain " << baseline
       << ", fa-plain " << fa << ", fa-conv " << fa_conv
       << " (need fa <= baseline, fa-conv <= fa-plain, baseline > 0)";
    record(6, "stability-ordering",
           fa <= baseline && fa_conv <= fa && baseline > 0.0, os.str());
  }
  // criterion 7: convergence ordering
  {
    const double baseline =
        median(pool.metric(Mechanism::kBaseline, Stabilizer::kNone, false));
    const double fa =
        median(pool.metric(Mechanism::kForward, Stabilizer::kNone, false));
    const double fa_ta =
        median(pool.metric(Mechanism::kForwardTa, Stabilizer::kNone, false));
    std::ostringstream os;
    os << "convergence ordering: median epochs-to-stable baseline "
       << baseline << ", fa " << fa << ", fa-ta " << fa_ta
       << " (need fa <= baseline and fa-ta <= baseline)";
    record(7, "convergence-ordering", fa <= baseline && fa_ta <= baseline,
           os.str());
  }
  // criterion 8: speed control
  {
    std::vector<SweepRow> surviving;
    for (const auto& row : pool.sweep.rows)
      if (row.n_failed == 0) surviving.push_back(row);
    bool monotone = !surviving.empty();
    for (std::size_t i = 1; i < surviving.size(); ++i)
      if (surviving[i].mean_ratio > surviving[i - 1].mean_ratio + 1e-9)
        monotone = false;
    double spread = 0.0;
    if (!surviving.empty())
      spread = surviving.front().mean_ratio - surviving.back().mean_ratio;
    std::ostringstream os;
    os << "speed control: " << surviving.size()
       << " surviving biases over " << pool.sweep.swept_samples
       << " samples (" << pool.sweep.excluded_at_zero
       << " excluded at bias 0), ratio spread " << formatG9(spread)
       << " (need non-increasing ratios and spread >= 0.10)";
    record(8, "speed-control", monotone && spread >= 0.10, os.str());
  }
}

// ---- criterion 9: byte-identical reruns ----------------------------------

void criterion9(const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  RunConfig config;
  config.set("train_size", "150");
  config.set("test_size", "40");
  config.set("epochs", "2");
  const TaskConfig task = config.taskConfig();
  const Dataset data = makeDataset(task);

  auto runOnce = [&](const fs::path& dir) {
    fs::create_directories(dir);
    Seq2SeqModel model(config.modelConfig());
    TrainOptions options = config.trainOptions();
    options.out_dir = dir;
    trainModel(model, data, options);
  };
  const fs::path d1 = out_dir / "rerun_a";
  const fs::path d2 = out_dir / "rerun_b";
  runOnce(d1);
  runOnce(d2);
  const bool metrics_equal =
      readFile(d1 / "metrics.csv") == readFile(d2 / "metrics.csv");
  const bool ckpt_equal =
      readFile(d1 / "ckpt_final.txt") == readFile(d2 / "ckpt_final.txt");
  std::ostringstream os;
  os << "reproducibility: metrics.csv "
     << (metrics_equal ? "identical" : "DIFFER") << ", ckpt_final.txt "
     << (ckpt_equal ? "identical" : "DIFFER");
  record(9, "reproducibility", metrics_equal && ckpt_equal, os.str());
}

}  // namespace

int main() {
  const auto out_dir = makeRunDir("acceptance_runs", "acceptance");
  std::cerr << "acceptance artifacts: " << out_dir.string() << "\n";

  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion9(out_dir);
  std::cerr << "training pool for criteria 6-8...\n";
  const TrainingPool pool = runTrainingPool(out_dir);
  criteria678(pool);

  std::sort(g_results.begin(), g_results.end(),
            [](const CriterionResult& a, const CriterionResult& b) {
              return a.number < b.number;
            });
  int failures = 0;
  std::vector<std::string> summary;
  for (const auto& r : g_results) {
    std::ostringstream os;
    os << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.number << " ("
       << r.name << "): " << r.detail;
    std::cout << os.str() << "\n";
    summary.push_back(os.str());
    if (!r.pass) ++failures;
  }
  writeLines(summary, out_dir / "summary.txt");
  return failures == 0 ? 0 : 1;
}
