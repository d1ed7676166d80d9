#include "monoattn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "monoattn/adam.hpp"
#include "monoattn/artifacts.hpp"

namespace monoattn {

namespace fs = std::filesystem;

namespace {

int freeRunBudget(const TaskSample& sample, const ModelConfig& config,
                  int factor) {
  const int gold_steps =
      (static_cast<int>(sample.frames.rows()) + config.reduction - 1) /
      config.reduction;
  return factor * gold_steps;
}

std::string checkpointName(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_epoch_%03d.txt", epoch);
  return buf;
}

}  // namespace

AlignmentDiagnostics diagnoseFreeRun(Seq2SeqModel& model,
                                     const TaskSample& sample, double bias,
                                     const TrainOptions& options,
                                     FreeRunResult* out) {
  const int budget =
      freeRunBudget(sample, model.config(), options.max_steps_factor);
  FreeRunResult run = model.freeRun(sample.tokens, bias, budget);
  const int s_max = stuckLimit(options.diag, /*dur_max=*/
                               *std::max_element(sample.durations.begin(),
                                                 sample.durations.end()),
                               model.config().reduction);
  AlignmentDiagnostics d =
      diagnoseAlignment(run.alignment, static_cast<int>(sample.tokens.size()),
                        s_max, options.diag, run.truncated);
  if (out) *out = std::move(run);
  return d;
}

RunMetrics trainModel(Seq2SeqModel& model, const Dataset& data,
                      const TrainOptions& options) {
  if (data.train.empty()) throw Error("trainModel: empty training split");
  ad::Adam optimizer({.lr = options.lr});
  // Separate streams from the init: shuffling and feedback corruption must
  // not disturb what the model seed produced.
  Rng shuffle_rng(model.config().seed ^ 0x9e3779b97f4a7c15ull);
  Rng feedback_rng(model.config().seed ^ 0xc2b2ae3d27d4eb4full);
  Seq2SeqModel::FeedbackCorruption corruption{
      &feedback_rng, options.feedback_dropout, options.feedback_noise};
  const bool corrupt =
      options.feedback_dropout > 0.0 || options.feedback_noise > 0.0;

  RunMetrics metrics;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    // Fisher-Yates with the deterministic rng
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(
          shuffle_rng.uniformInt(0, static_cast<int>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    double loss_acc = 0.0;
    for (std::size_t idx : order) {
      const TaskSample& sample = data.train[idx];
      ad::Tape tape;
      TeacherForcedResult r = model.teacherForced(
          tape, sample.tokens, sample.frames, corrupt ? &corruption : nullptr);
      const double loss = r.loss.scalarValue();
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "training diverged at epoch " << epoch << ": non-finite loss "
           << loss << " on sample with tokens [";
        for (std::size_t i = 0; i < sample.tokens.size(); ++i)
          os << (i ? " " : "") << sample.tokens[i];
        os << "] durations [";
        for (std::size_t i = 0; i < sample.durations.size(); ++i)
          os << (i ? " " : "") << sample.durations[i];
        os << "]";
        throw NumericalError(os.str());
      }
      loss_acc += loss;
      tape.backward(r.loss);
      optimizer.step(model.params());
      model.params().zeroGrad();
      if (options.score_decay > 0.0)
        model.params().get("attn.score_v").value *=
            1.0 - options.score_decay * options.lr;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_acc / static_cast<double>(data.train.size());

    // Validation: teacher-forced loss and sharpness, free-run failure rate.
    double val_loss = 0.0, sharp = 0.0, u_sum = 0.0;
    int failed = 0, u_count = 0;
    for (const TaskSample& sample : data.test) {
      ad::Tape tape(/*track_gradients=*/false);
      TeacherForcedResult r =
          model.teacherForced(tape, sample.tokens, sample.frames);
      val_loss += r.loss.scalarValue();
      sharp += r.alignment.rowwise().maxCoeff().mean();
      if (r.mean_u >= 0.0) {
        u_sum += r.mean_u;
        ++u_count;
      }
      if (diagnoseFreeRun(model, sample, 0.0, options).failed) ++failed;
    }
    const double denom = static_cast<double>(std::max<std::size_t>(
        data.test.size(), 1));
    em.val_loss = val_loss / denom;
    em.sharpness = sharp / denom;
    em.val_fail_rate = static_cast<double>(failed) / denom;
    if (u_count > 0) em.mean_u = u_sum / u_count;
    metrics.epochs.push_back(em);
    if (em.val_fail_rate <= options.stable_fail_rate &&
        std::isinf(metrics.epochs_to_stable))
      metrics.epochs_to_stable = epoch;

    if (options.out_dir) {
      model.params().save(*options.out_dir / checkpointName(epoch));
      if (!data.test.empty()) {
        ad::Tape tape(/*track_gradients=*/false);
        TeacherForcedResult snap = model.teacherForced(
            tape, data.test.front().tokens, data.test.front().frames);
        char base[40];
        std::snprintf(base, sizeof base, "align_epoch_%03d", epoch);
        writeAlignmentCsv(snap.alignment,
                          *options.out_dir / (std::string(base) + ".csv"));
        writeAlignmentPgm(snap.alignment,
                          *options.out_dir / (std::string(base) + ".pgm"));
      }
    }
  }

  if (options.out_dir) {
    model.params().save(*options.out_dir / "ckpt_final.txt");
    const bool with_u =
        model.config().mechanism == attn::Mechanism::kForwardTa;
    writeLines(metricsCsvLines(metrics, with_u),
               *options.out_dir / "metrics.csv");
  }
  return metrics;
}

std::vector<std::string> metricsCsvLines(const RunMetrics& metrics,
                                         bool with_mean_u) {
  std::vector<std::string> lines;
  lines.push_back(with_mean_u
                      ? "epoch,train_loss,val_loss,val_fail_rate,sharpness,"
                        "mean_u"
                      : "epoch,train_loss,val_loss,val_fail_rate,sharpness");
  for (const auto& em : metrics.epochs) {
    std::ostringstream os;
    os << em.epoch << ',' << formatG9(em.train_loss) << ','
       << formatG9(em.val_loss) << ',' << formatG9(em.val_fail_rate) << ','
       << formatG9(em.sharpness);
    if (with_mean_u) os << ',' << formatG9(em.mean_u.value_or(-1.0));
    lines.push_back(os.str());
  }
  return lines;
}

}  // namespace monoattn
