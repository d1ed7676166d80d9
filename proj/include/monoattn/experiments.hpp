#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "monoattn/train.hpp"

namespace monoattn {

struct StabilityResult {
  int failed = 0;
  std::vector<AlignmentDiagnostics> per_sample;
};

// Free-runs every test sample at bias 0 (budget max_steps_factor x gold step
// count) and aggregates the failure flags. Pure in (parameters, dataset).
StabilityResult stabilityEval(Seq2SeqModel& model,
                              const std::vector<TaskSample>& test,
                              const TrainOptions& options);

std::vector<std::string> perSampleDiagnosticsCsv(const StabilityResult& r);

// Table 1 layout: rows baseline/fa/fa-ta, columns plain/window/conv.
struct StabilityGrid {
  // cell[mechanism][stabilizer], -1 when missing
  int cell[3][3] = {{-1, -1, -1}, {-1, -1, -1}, {-1, -1, -1}};
};
std::vector<std::string> stabilityGridCsv(const StabilityGrid& grid);

struct ConvergenceRow {
  attn::Mechanism mechanism;
  attn::Stabilizer stabilizer;
  std::uint64_t seed = 0;
  double epochs_to_stable = 0.0;
};

struct ConvergenceJob {
  ModelConfig model;
  std::filesystem::path out_dir;
};

// Trains every job (fanned out over `jobs` threads, each run fully
// independent) and reports epochs-to-stable per (config, seed).
std::vector<ConvergenceRow> convergenceCompare(
    const std::vector<ConvergenceJob>& runs, const TaskConfig& task,
    const TrainOptions& options, int jobs = 1);

std::vector<std::string> convergenceCsv(const std::vector<ConvergenceRow>&);

struct SweepRow {
  double bias = 0.0;
  double mean_ratio = 1.0;
  double stddev_ratio = 0.0;
  int n_failed = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // Samples dropped before sweeping because unbiased synthesis already
  // failed (the sweep set mirrors the paper's "correctly synthesized"
  // utterance selection).
  int excluded_at_zero = 0;
  int swept_samples = 0;
};

// Duration-ratio sweep over transition biases, extending outward from 0 in
// steps of `bias_step` and stopping a direction once any sample fails
// diagnostics (the failing bias is still reported). Requires a transition
// agent.
SweepResult speedSweep(Seq2SeqModel& model,
                       const std::vector<TaskSample>& test, double bias_limit,
                       double bias_step, const TrainOptions& options);

std::vector<std::string> speedSweepCsv(const std::vector<SweepRow>&);

}  // namespace monoattn
