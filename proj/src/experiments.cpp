#include "monoattn/experiments.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "monoattn/artifacts.hpp"

namespace monoattn {

StabilityResult stabilityEval(Seq2SeqModel& model,
                              const std::vector<TaskSample>& test,
                              const TrainOptions& options) {
  StabilityResult result;
  result.per_sample.reserve(test.size());
  for (const TaskSample& sample : test) {
    AlignmentDiagnostics d = diagnoseFreeRun(model, sample, 0.0, options);
    if (d.failed) ++result.failed;
    result.per_sample.push_back(d);
  }
  return result;
}

std::vector<std::string> perSampleDiagnosticsCsv(const StabilityResult& r) {
  std::vector<std::string> lines;
  lines.push_back("sample,covered,regressed,stuck,diffuse,truncated,failed");
  for (std::size_t i = 0; i < r.per_sample.size(); ++i) {
    const auto& d = r.per_sample[i];
    std::ostringstream os;
    os << i << ',' << d.covered << ',' << d.regressed << ',' << d.stuck << ','
       << d.diffuse << ',' << d.truncated << ',' << d.failed;
    lines.push_back(os.str());
  }
  return lines;
}

std::vector<std::string> stabilityGridCsv(const StabilityGrid& grid) {
  static const char* mech[3] = {"baseline", "fa", "fa-ta"};
  std::vector<std::string> lines;
  lines.push_back("mechanism,plain,window,conv");
  for (int m = 0; m < 3; ++m) {
    std::ostringstream os;
    os << mech[m];
    for (int s = 0; s < 3; ++s) os << ',' << grid.cell[m][s];
    lines.push_back(os.str());
  }
  return lines;
}

std::vector<ConvergenceRow> convergenceCompare(
    const std::vector<ConvergenceJob>& runs, const TaskConfig& task,
    const TrainOptions& options, int jobs) {
  std::vector<ConvergenceRow> rows(runs.size());
  const Dataset data = makeDataset(task);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      Seq2SeqModel model(runs[i].model);
      TrainOptions local = options;
      local.out_dir = runs[i].out_dir;
      std::filesystem::create_directories(runs[i].out_dir);
      RunMetrics metrics = trainModel(model, data, local);
      rows[i] = {runs[i].model.mechanism, runs[i].model.stabilizer,
                 runs[i].model.seed, metrics.epochs_to_stable};
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

std::vector<std::string> convergenceCsv(
    const std::vector<ConvergenceRow>& rows) {
  std::vector<std::string> lines;
  lines.push_back("mechanism,stabilizer,seed,epochs_to_stable");
  for (const auto& r : rows) {
    std::ostringstream os;
    os << attn::name(r.mechanism) << ',' << attn::name(r.stabilizer)
       << ',' << r.seed << ',';
    if (std::isinf(r.epochs_to_stable))
      os << "inf";
    else
      os << formatG9(r.epochs_to_stable);
    lines.push_back(os.str());
  }
  return lines;
}

namespace {

SweepRow evalBias(Seq2SeqModel& model, const std::vector<TaskSample>& test,
                  const std::vector<int>& baseline_len, double bias,
                  const TrainOptions& options) {
  SweepRow row;
  row.bias = bias;
  std::vector<double> ratios;
  ratios.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    FreeRunResult run;
    AlignmentDiagnostics d =
        diagnoseFreeRun(model, test[i], bias, options, &run);
    if (d.failed) ++row.n_failed;
    ratios.push_back(static_cast<double>(run.frames.rows()) /
                     static_cast<double>(baseline_len[i]));
  }
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  double var = 0.0;
  for (double r : ratios) var += (r - mean) * (r - mean);
  var /= static_cast<double>(ratios.size());
  row.mean_ratio = mean;
  row.stddev_ratio = std::sqrt(var);
  return row;
}

}  // namespace

SweepResult speedSweep(Seq2SeqModel& model,
                       const std::vector<TaskSample>& test, double bias_limit,
                       double bias_step, const TrainOptions& options) {
  if (model.config().mechanism != attn::Mechanism::kForwardTa)
    throw Error("speed_sweep: requires a model trained with mechanism=fa-ta");
  if (test.empty()) throw Error("speed_sweep: empty test set");
  if (bias_step <= 0.0) throw Error("speed_sweep: bias step must be positive");

  // Sweep set: the test samples whose unbiased synthesis passes, as in the
  // paper's selection of correctly synthesized utterances.
  SweepResult result;
  std::vector<TaskSample> kept;
  std::vector<int> baseline_len;
  for (const TaskSample& sample : test) {
    FreeRunResult run;
    if (diagnoseFreeRun(model, sample, 0.0, options, &run).failed) {
      ++result.excluded_at_zero;
      continue;
    }
    kept.push_back(sample);
    baseline_len.push_back(static_cast<int>(run.frames.rows()));
  }
  result.swept_samples = static_cast<int>(kept.size());
  if (kept.empty())
    throw Error("speed_sweep: every sample failed unbiased synthesis");

  SweepRow zero = evalBias(model, kept, baseline_len, 0.0, options);
  result.rows.push_back(zero);
  // extend in each direction until a sample fails or the limit is reached
  for (int dir : {-1, +1}) {
    for (int k = 1; static_cast<double>(k) * bias_step <=
                    bias_limit + 1e-12; ++k) {
      const double bias = dir * k * bias_step;
      SweepRow row = evalBias(model, kept, baseline_len, bias, options);
      result.rows.push_back(row);
      if (row.n_failed > 0) break;
    }
  }
  std::sort(result.rows.begin(), result.rows.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.bias < b.bias; });
  return result;
}

std::vector<std::string> speedSweepCsv(const std::vector<SweepRow>& rows) {
  std::vector<std::string> lines;
  lines.push_back("bias,mean_ratio,stddev_ratio,n_failed");
  for (const auto& r : rows) {
    std::ostringstream os;
    os << formatG9(r.bias) << ',' << formatG9(r.mean_ratio) << ','
       << formatG9(r.stddev_ratio) << ',' << r.n_failed;
    lines.push_back(os.str());
  }
  return lines;
}

}  // namespace monoattn
