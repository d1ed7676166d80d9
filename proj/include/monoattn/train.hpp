#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "monoattn/diagnostics.hpp"
#include "monoattn/model.hpp"
#include "monoattn/task.hpp"

namespace monoattn {

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_fail_rate = 0.0;
  double sharpness = 0.0;  // mean per-step max weight, teacher-forced
  std::optional<double> mean_u;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  // First epoch with validation failure rate <= the stability threshold;
  // +inf when never reached.
  double epochs_to_stable = std::numeric_limits<double>::infinity();
};

struct TrainOptions {
  int epochs = 30;
  double lr = 1e-3;
  double stable_fail_rate = 0.05;
  int max_steps_factor = 4;  // free-run budget = factor * gold step count
  double feedback_dropout = 0.0;
  double feedback_noise = 0.0;
  // L2 decay on the attention score vector; bounds the energy scale so the
  // content softmax keeps a temperature instead of freezing hard.
  double score_decay = 0.0;
  DiagnosticsConfig diag;
  // When set, per-epoch checkpoints, metrics.csv and alignment snapshots of
  // the first validation sample land here.
  std::optional<std::filesystem::path> out_dir;
};

// Adam at the configured rate, batch size 1, teacher forcing throughout.
// Deterministic for a fixed (model config, task config, options) triple;
// the model config's seed drives both the init and the shuffles. Aborts
// with NumericalError (naming the offending sample) on a non-finite loss.
RunMetrics trainModel(Seq2SeqModel& model, const Dataset& data,
                      const TrainOptions& options);

// Metrics CSV: epoch,train_loss,val_loss,val_fail_rate,sharpness[,mean_u].
std::vector<std::string> metricsCsvLines(const RunMetrics& metrics,
                                         bool with_mean_u);

// Free-run a sample and diagnose it. Shared by validation, stability
// evaluation and the bias sweep.
AlignmentDiagnostics diagnoseFreeRun(Seq2SeqModel& model,
                                     const TaskSample& sample, double bias,
                                     const TrainOptions& options,
                                     FreeRunResult* out = nullptr);

}  // namespace monoattn
