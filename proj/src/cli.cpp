#include "monoattn/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

#include "monoattn/artifacts.hpp"
#include "monoattn/config.hpp"
#include "monoattn/experiments.hpp"
#include "monoattn/verify.hpp"

namespace monoattn {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerifyFail = 2;
constexpr int kExitUsage = 64;

struct CommonOpts {
  std::optional<fs::path> config_file;
  std::vector<std::string> overrides;
  std::optional<fs::path> out;
};

void addCommonOpts(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file,
                  "config file with `key = value` lines");
  cmd->add_option("--set", opts.overrides,
                  "override a config key (key=value, repeatable)");
  cmd->add_option("--out", opts.out,
                  "run directory (must not exist; default: fresh timestamped "
                  "directory under ./runs)");
}

fs::path openRunDir(const CommonOpts& opts, const std::string& command,
                    const RunConfig& config) {
  const fs::path dir = opts.out ? claimOutDir(*opts.out)
                                : makeRunDir("runs", command);
  writeLines(config.lines(), dir / "config.txt");
  return dir;
}

std::vector<int> parseIntList(const std::string& text, const char* what) {
  std::istringstream is(text);
  std::vector<int> out;
  int v;
  while (is >> v) out.push_back(v);
  if (!is.eof() || out.empty())
    throw ConfigError(std::string("cannot parse ") + what + " from '" + text +
                      "'");
  return out;
}

std::string configKeyHelp() {
  std::ostringstream os;
  os << "Config keys (file `key = value` lines or --set key=value):\n";
  for (const auto& k : configKeys())
    os << "  " << k.name << " = " << k.default_value << "\n      "
       << k.description << "\n";
  return os.str();
}

// Model + resolved config for a checkpoint. The sidecar config.txt written
// next to every checkpoint makes the run reproducible; --config overrides.
struct LoadedModel {
  RunConfig run;
  std::unique_ptr<Seq2SeqModel> model;
};

LoadedModel loadModel(const fs::path& ckpt, const CommonOpts& opts) {
  std::optional<fs::path> config_file = opts.config_file;
  if (!config_file) {
    const fs::path sidecar = ckpt.parent_path() / "config.txt";
    if (!fs::exists(sidecar))
      throw ConfigError("no --config given and no sidecar " +
                        sidecar.string());
    config_file = sidecar;
  }
  LoadedModel lm{RunConfig::resolve(config_file, opts.overrides), nullptr};
  lm.model = std::make_unique<Seq2SeqModel>(lm.run.modelConfig());
  lm.model->params().load(ckpt);
  return lm;
}

int maxStepsFor(const std::vector<int>& tokens, const RunConfig& run) {
  const int r = run.getInt("reduction");
  const int worst_frames = static_cast<int>(tokens.size()) *
                           run.getInt("dur_max");
  return run.getInt("max_steps_factor") * ((worst_frames + r - 1) / r);
}

int cmdGenData(const CommonOpts& opts) {
  RunConfig run = RunConfig::resolve(opts.config_file, opts.overrides);
  const fs::path dir = openRunDir(opts, "gen-data", run);
  const TaskConfig task = run.taskConfig();
  const Dataset data = makeDataset(task);
  writeDataset(data.train, dir / "data_train.txt", task);
  writeDataset(data.test, dir / "data_test.txt", task);
  std::cout << "wrote " << data.train.size() << " train / "
            << data.test.size() << " test samples to " << dir.string()
            << "\n";
  return kExitOk;
}

int cmdTrain(const CommonOpts& opts, const std::string& data_dir) {
  RunConfig run = RunConfig::resolve(opts.config_file, opts.overrides);
  const fs::path dir = openRunDir(opts, "train", run);
  Dataset data;
  if (!data_dir.empty()) {
    data.train = readDataset(fs::path(data_dir) / "data_train.txt");
    data.test = readDataset(fs::path(data_dir) / "data_test.txt");
  } else {
    data = makeDataset(run.taskConfig());
  }
  Seq2SeqModel model(run.modelConfig());
  TrainOptions options = run.trainOptions();
  options.out_dir = dir;
  RunMetrics metrics = trainModel(model, data, options);
  const auto& last = metrics.epochs.back();
  std::cout << "run dir: " << dir.string() << "\n"
            << "final val loss " << formatG9(last.val_loss)
            << ", val fail rate " << formatG9(last.val_fail_rate)
            << ", epochs-to-stable ";
  if (std::isinf(metrics.epochs_to_stable))
    std::cout << "never";
  else
    std::cout << metrics.epochs_to_stable;
  std::cout << "\n";
  return kExitOk;
}

int cmdSynth(const CommonOpts& opts, const fs::path& ckpt,
             const std::string& tokens_text, double bias) {
  LoadedModel lm = loadModel(ckpt, opts);
  const fs::path dir = openRunDir(opts, "synth", lm.run);
  const std::vector<int> tokens = parseIntList(tokens_text, "tokens");
  FreeRunResult result = lm.model->freeRun(
      tokens, bias, maxStepsFor(tokens, lm.run));
  writeFramesCsv(result.frames, dir / "frames.csv");
  writeAlignmentCsv(result.alignment, dir / "alignment.csv");
  writeAlignmentPgm(result.alignment, dir / "alignment.pgm");
  if (result.u_trace.size() > 0)
    writeFramesCsv(result.u_trace, dir / "u_trace.csv");
  std::cout << "synthesized " << result.frames.rows() << " frames in "
            << result.steps << " steps"
            << (result.truncated ? " (truncated)" : "") << " -> "
            << dir.string() << "\n";
  return kExitOk;
}

int cmdAlign(const CommonOpts& opts, const fs::path& ckpt,
             const std::string& tokens_text,
             const std::string& durations_text) {
  LoadedModel lm = loadModel(ckpt, opts);
  const fs::path dir = openRunDir(opts, "align", lm.run);
  const std::vector<int> tokens = parseIntList(tokens_text, "tokens");
  const std::vector<int> durations =
      parseIntList(durations_text, "durations");
  const TaskConfig task = lm.run.taskConfig();
  const Eigen::MatrixXd patterns =
      patternTable(task.vocab, task.frame_width, task.pattern_seed);
  const Eigen::MatrixXd frames = renderFrames(tokens, durations, patterns);
  ad::Tape tape(/*track_gradients=*/false);
  TeacherForcedResult result = lm.model->teacherForced(tape, tokens, frames);
  writeAlignmentCsv(result.alignment, dir / "alignment.csv");
  writeAlignmentPgm(result.alignment, dir / "alignment.pgm");
  std::cout << "teacher-forced loss " << formatG9(result.loss.scalarValue())
            << " -> " << dir.string() << "\n";
  return kExitOk;
}

int cmdOracleCheck(const CommonOpts& opts, int trials, int max_n, int max_t,
                   std::optional<std::uint64_t> seed, double tol) {
  RunConfig run = RunConfig::resolve(opts.config_file, opts.overrides);
  const std::uint64_t s = seed.value_or(run.getU64("seed"));
  OracleCheckResult result = oracleCheck(trials, max_n, max_t, s);
  std::cout << "oracle-check: " << result.trials
            << " trials, max deviation " << formatG9(result.max_deviation)
            << " (tolerance " << formatG9(tol) << ")\n";
  return result.max_deviation < tol ? kExitOk : kExitVerifyFail;
}

int cmdGradCheck(const CommonOpts& opts, double tol, double fd_step,
                 const std::string& corrupt) {
  (void)opts;
  std::function<void(ad::ParameterStore&)> tweak;
  if (!corrupt.empty()) {
    // Test fixture: simulate a broken gradient path for one parameter.
    tweak = [corrupt](ad::ParameterStore& params) {
      ad::Parameter& p = params.get(corrupt);
      if (!p.hasGrad()) p.grad = ad::Matrix::Zero(p.value.rows(), p.value.cols());
      p.grad.array() += 1.0;
    };
  }
  bool ok = true;
  for (const GradCheckCase& c : gradCheckAllConfigs(fd_step, tweak)) {
    const bool pass = c.report.passes(tol);
    ok = ok && pass;
    std::cout << "grad-check " << attn::name(c.config.mechanism) << "/"
              << attn::name(c.config.stabilizer) << ": max rel error "
              << formatG9(c.report.worst) << " (" << c.report.worst_param
              << ") " << (pass ? "ok" : "FAIL") << "\n";
  }
  return ok ? kExitOk : kExitVerifyFail;
}

int cmdStabilityEval(const CommonOpts& opts, const fs::path& ckpt,
                     const fs::path& grid_dir) {
  if (!grid_dir.empty() && !ckpt.empty())
    throw ConfigError("stability-eval: give either --ckpt or --grid");

  if (!grid_dir.empty()) {
    // Scan run directories for the nine mechanism x stabilizer combinations.
    RunConfig probe = RunConfig::resolve(opts.config_file, opts.overrides);
    const fs::path dir = openRunDir(opts, "stability-eval", probe);
    StabilityGrid grid;
    for (const auto& entry : fs::directory_iterator(grid_dir)) {
      if (!entry.is_directory()) continue;
      const fs::path sub_ckpt = entry.path() / "ckpt_final.txt";
      const fs::path sub_cfg = entry.path() / "config.txt";
      if (!fs::exists(sub_ckpt) || !fs::exists(sub_cfg)) continue;
      CommonOpts sub_opts = opts;
      sub_opts.config_file = sub_cfg;
      LoadedModel lm = loadModel(sub_ckpt, sub_opts);
      const Dataset data = makeDataset(lm.run.taskConfig());
      StabilityResult r =
          stabilityEval(*lm.model, data.test, lm.run.trainOptions());
      const int m = static_cast<int>(lm.model->config().mechanism);
      const int s = static_cast<int>(lm.model->config().stabilizer);
      grid.cell[m][s] = r.failed;
    }
    writeLines(stabilityGridCsv(grid), dir / "stability_grid.csv");
    for (const auto& line : stabilityGridCsv(grid)) std::cout << line << "\n";
    std::cout << "-> " << (dir / "stability_grid.csv").string() << "\n";
    return kExitOk;
  }

  LoadedModel lm = loadModel(ckpt, opts);
  const fs::path dir = openRunDir(opts, "stability-eval", lm.run);
  const Dataset data = makeDataset(lm.run.taskConfig());
  StabilityResult r =
      stabilityEval(*lm.model, data.test, lm.run.trainOptions());
  writeLines(perSampleDiagnosticsCsv(r), dir / "diagnostics.csv");
  std::cout << "failed " << r.failed << " / " << data.test.size()
            << " samples -> " << dir.string() << "\n";
  return kExitOk;
}

int cmdConvergenceCompare(const CommonOpts& opts,
                          const std::string& mechanisms,
                          const std::string& stabilizers,
                          const std::string& seeds_text, int jobs) {
  RunConfig run = RunConfig::resolve(opts.config_file, opts.overrides);
  const fs::path dir = openRunDir(opts, "convergence-compare", run);

  std::vector<attn::Mechanism> mechs;
  {
    std::istringstream is(mechanisms);
    std::string tok;
    while (std::getline(is, tok, ','))
      mechs.push_back(attn::mechanismFromString(tok));
  }
  std::vector<attn::Stabilizer> stabs;
  {
    std::istringstream is(stabilizers);
    std::string tok;
    while (std::getline(is, tok, ','))
      stabs.push_back(attn::stabilizerFromString(tok));
  }
  const std::vector<int> seeds = parseIntList(seeds_text, "seeds");

  std::vector<ConvergenceJob> runs;
  for (attn::Mechanism m : mechs)
    for (attn::Stabilizer s : stabs)
      for (int seed : seeds) {
        ConvergenceJob job;
        job.model = run.modelConfig();
        job.model.mechanism = m;
        job.model.stabilizer = s;
        job.model.seed = static_cast<std::uint64_t>(seed);
        job.out_dir = dir / (attn::name(m) + "-" + attn::name(s) +
                             "-seed" + std::to_string(seed));
        runs.push_back(std::move(job));
      }
  const std::vector<ConvergenceRow> rows =
      convergenceCompare(runs, run.taskConfig(), run.trainOptions(), jobs);
  writeLines(convergenceCsv(rows), dir / "convergence.csv");
  for (const auto& line : convergenceCsv(rows)) std::cout << line << "\n";
  std::cout << "-> " << (dir / "convergence.csv").string() << "\n";
  return kExitOk;
}

int cmdSpeedSweep(const CommonOpts& opts, const fs::path& ckpt,
                  double bias_limit, double bias_step) {
  LoadedModel lm = loadModel(ckpt, opts);
  const fs::path dir = openRunDir(opts, "speed-sweep", lm.run);
  const Dataset data = makeDataset(lm.run.taskConfig());
  const SweepResult result = speedSweep(*lm.model, data.test, bias_limit,
                                        bias_step, lm.run.trainOptions());
  writeLines(speedSweepCsv(result.rows), dir / "speed_sweep.csv");
  std::cout << "sweep set: " << result.swept_samples << " samples ("
            << result.excluded_at_zero
            << " excluded, failed unbiased synthesis)\n";
  for (const auto& line : speedSweepCsv(result.rows)) std::cout << line << "\n";
  std::cout << "-> " << (dir / "speed_sweep.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int runCli(const std::vector<std::string>& args) {
  CLI::App app{
      "monoattn: monotonic forward attention for sequence-to-sequence "
      "alignment, with a brute-force path oracle, gradient checking, and "
      "stability / convergence / speed-control experiments"};
  app.require_subcommand(1);
  app.footer(configKeyHelp());

  CommonOpts gen_opts;
  CLI::App* gen = app.add_subcommand("gen-data",
                                     "generate a synthetic expansion dataset");
  addCommonOpts(gen, gen_opts);

  CommonOpts train_opts;
  std::string train_data;
  CLI::App* train = app.add_subcommand("train", "train one configuration");
  addCommonOpts(train, train_opts);
  train->add_option("--data", train_data,
                    "directory with data_train.txt/data_test.txt (default: "
                    "generate from config)");

  CommonOpts synth_opts;
  fs::path synth_ckpt;
  std::string synth_tokens;
  double synth_bias = 0.0;
  CLI::App* synth = app.add_subcommand("synth",
                                       "free-running synthesis from tokens");
  addCommonOpts(synth, synth_opts);
  synth->add_option("--ckpt", synth_ckpt, "checkpoint file")->required();
  synth->add_option("--tokens", synth_tokens, "token ids, e.g. \"2 5 7\"")
      ->required();
  synth->add_option("--bias", synth_bias,
                    "transition bias added to the agent logit");

  CommonOpts align_opts;
  fs::path align_ckpt;
  std::string align_tokens, align_durations;
  CLI::App* align = app.add_subcommand(
      "align", "teacher-forced alignment of a token/duration pair");
  addCommonOpts(align, align_opts);
  align->add_option("--ckpt", align_ckpt, "checkpoint file")->required();
  align->add_option("--tokens", align_tokens, "token ids")->required();
  align->add_option("--durations", align_durations, "per-token durations")
      ->required();

  CommonOpts oracle_opts;
  int oracle_trials = 100, oracle_max_n = 6, oracle_max_t = 8;
  std::optional<std::uint64_t> oracle_seed;
  double oracle_tol = 1e-9;
  CLI::App* oracle = app.add_subcommand(
      "oracle-check",
      "check the forward recursions against brute-force path enumeration");
  addCommonOpts(oracle, oracle_opts);
  oracle->add_option("--trials", oracle_trials, "random traces to draw");
  oracle->add_option("--max-n", oracle_max_n, "max encoder positions");
  oracle->add_option("--max-t", oracle_max_t, "max decoder steps");
  oracle->add_option("--seed", oracle_seed, "trace seed");
  oracle->add_option("--tol", oracle_tol, "max allowed deviation");

  CommonOpts grad_opts;
  double grad_tol = 1e-4, grad_step = 1e-5;
  std::string grad_corrupt;
  CLI::App* grad = app.add_subcommand(
      "grad-check",
      "finite-difference check of the end-to-end loss, all nine configs");
  addCommonOpts(grad, grad_opts);
  grad->add_option("--tol", grad_tol, "max allowed relative error");
  grad->add_option("--step", grad_step, "central-difference step");
  grad->add_option("--corrupt", grad_corrupt,
                   "test fixture: perturb the named parameter's analytic "
                   "gradient and expect failure");

  CommonOpts stab_opts;
  fs::path stab_ckpt, stab_grid;
  CLI::App* stab = app.add_subcommand(
      "stability-eval", "free-run the test set and count failed samples");
  addCommonOpts(stab, stab_opts);
  stab->add_option("--ckpt", stab_ckpt, "checkpoint file");
  stab->add_option("--grid", stab_grid,
                   "directory of run directories; emits the 3x3 grid table");

  CommonOpts conv_opts;
  std::string conv_mechanisms = "baseline,fa,fa-ta";
  std::string conv_stabilizers = "none";
  std::string conv_seeds = "1 2 3";
  int conv_jobs = 1;
  CLI::App* conv = app.add_subcommand(
      "convergence-compare",
      "train configs across seeds and compare epochs-to-stable");
  addCommonOpts(conv, conv_opts);
  conv->add_option("--mechanisms", conv_mechanisms, "comma-separated list");
  conv->add_option("--stabilizers", conv_stabilizers, "comma-separated list");
  conv->add_option("--seeds", conv_seeds, "space-separated seeds");
  conv->add_option("--jobs", conv_jobs, "parallel training runs");

  CommonOpts sweep_opts;
  fs::path sweep_ckpt;
  double sweep_limit = 0.6, sweep_step = 0.2;
  CLI::App* sweep = app.add_subcommand(
      "speed-sweep", "duration-ratio sweep over transition biases");
  addCommonOpts(sweep, sweep_opts);
  sweep->add_option("--ckpt", sweep_ckpt, "fa-ta checkpoint")->required();
  sweep->add_option("--bias-limit", sweep_limit, "sweep endpoint magnitude");
  sweep->add_option("--bias-step", sweep_step, "sweep step");

  std::vector<std::string> argv_storage = args;
  std::vector<const char*> argv;
  argv.push_back("monoattn");
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmdGenData(gen_opts);
    if (train->parsed()) return cmdTrain(train_opts, train_data);
    if (synth->parsed())
      return cmdSynth(synth_opts, synth_ckpt, synth_tokens, synth_bias);
    if (align->parsed())
      return cmdAlign(align_opts, align_ckpt, align_tokens, align_durations);
    if (oracle->parsed())
      return cmdOracleCheck(oracle_opts, oracle_trials, oracle_max_n,
                            oracle_max_t, oracle_seed, oracle_tol);
    if (grad->parsed())
      return cmdGradCheck(grad_opts, grad_tol, grad_step, grad_corrupt);
    if (stab->parsed()) return cmdStabilityEval(stab_opts, stab_ckpt, stab_grid);
    if (conv->parsed())
      return cmdConvergenceCompare(conv_opts, conv_mechanisms,
                                   conv_stabilizers, conv_seeds, conv_jobs);
    if (sweep->parsed())
      return cmdSpeedSweep(sweep_opts, sweep_ckpt, sweep_limit, sweep_step);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace monoattn
