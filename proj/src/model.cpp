#include "monoattn/model.hpp"

#include <cmath>
#include <string>

namespace monoattn {

using ad::Tape;
using ad::Var;
using attn::Mechanism;
using attn::Stabilizer;

namespace {

double fanInScale(Eigen::Index fan_in) {
  return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

}  // namespace

Seq2SeqModel::Seq2SeqModel(const ModelConfig& config) : config_(config) {
  if (config_.reduction < 1) throw ConfigError("reduction must be >= 1");
  if (config_.vocab < 1) throw ConfigError("vocab must be >= 1");
  Rng rng(config_.seed);
  const int d_x = config_.encoderOutWidth();
  const int fw = config_.frame_width;

  auto uniform = [&](const std::string& name, Eigen::Index rows,
                     Eigen::Index cols) -> void {
    params_.createUniform(name, rows, cols, fanInScale(cols), rng);
  };

  params_.createUniform("embedding", config_.vocab, config_.embed_width, 0.5,
                        rng);
  uniform("enc.fwd.wi", config_.enc_width, config_.embed_width);
  uniform("enc.fwd.wh", config_.enc_width, config_.enc_width);
  params_.createZeros("enc.fwd.b", config_.enc_width, 1);
  uniform("enc.bwd.wi", config_.enc_width, config_.embed_width);
  uniform("enc.bwd.wh", config_.enc_width, config_.enc_width);
  params_.createZeros("enc.bwd.b", config_.enc_width, 1);

  uniform("attn.score_v", config_.attn_width, 1);
  uniform("attn.query_w", config_.attn_width, config_.dec_width);
  uniform("attn.memory_w", d_x, config_.attn_width);
  params_.createZeros("attn.bias", config_.attn_width, 1);
  if (config_.stabilizer == Stabilizer::kConv) {
    if (config_.conv_kernel_len % 2 == 0)
      throw ConfigError("conv_kernel_len must be odd");
    uniform("attn.conv_u", config_.conv_kernels, config_.attn_width);
    uniform("attn.kernels", config_.conv_kernels, config_.conv_kernel_len);
  }

  uniform("dec.wi", config_.dec_width, config_.cellFrameWidth() + d_x);
  uniform("dec.wh", config_.dec_width, config_.dec_width);
  params_.createZeros("dec.b", config_.dec_width, 1);
  uniform("out.w", config_.reduction * fw, config_.dec_width + d_x);
  params_.createZeros("out.b", config_.reduction * fw, 1);
  uniform("stop.w", 1, config_.dec_width + d_x);
  params_.createZeros("stop.b", 1, 1);
  params_.createZeros("go_frame", fw, 1);

  if (config_.mechanism == Mechanism::kForwardTa) {
    uniform("agent.w1", config_.agent_hidden, d_x + fw + config_.dec_width);
    params_.createZeros("agent.b1", config_.agent_hidden, 1);
    uniform("agent.w2", 1, config_.agent_hidden);
    params_.createZeros("agent.b2", 1, 1);
  }
}

Seq2SeqModel::BoundVars Seq2SeqModel::bind(Tape& tape) {
  BoundVars v;
  v.embedding = tape.use(params_.get("embedding"));
  v.enc_fwd_wi = tape.use(params_.get("enc.fwd.wi"));
  v.enc_fwd_wh = tape.use(params_.get("enc.fwd.wh"));
  v.enc_fwd_b = tape.use(params_.get("enc.fwd.b"));
  v.enc_bwd_wi = tape.use(params_.get("enc.bwd.wi"));
  v.enc_bwd_wh = tape.use(params_.get("enc.bwd.wh"));
  v.enc_bwd_b = tape.use(params_.get("enc.bwd.b"));
  v.attn.score_v = tape.use(params_.get("attn.score_v"));
  v.attn.query_w = tape.use(params_.get("attn.query_w"));
  v.attn.memory_w = tape.use(params_.get("attn.memory_w"));
  v.attn.bias = tape.use(params_.get("attn.bias"));
  if (config_.stabilizer == Stabilizer::kConv) {
    v.attn.conv_u = tape.use(params_.get("attn.conv_u"));
    v.attn.kernels = tape.use(params_.get("attn.kernels"));
  }
  v.dec_wi = tape.use(params_.get("dec.wi"));
  v.dec_wh = tape.use(params_.get("dec.wh"));
  v.dec_b = tape.use(params_.get("dec.b"));
  v.out_w = tape.use(params_.get("out.w"));
  v.out_b = tape.use(params_.get("out.b"));
  v.stop_w = tape.use(params_.get("stop.w"));
  v.stop_b = tape.use(params_.get("stop.b"));
  v.go_frame = tape.use(params_.get("go_frame"));
  if (config_.mechanism == Mechanism::kForwardTa) {
    v.agent.w1 = tape.use(params_.get("agent.w1"));
    v.agent.b1 = tape.use(params_.get("agent.b1"));
    v.agent.w2 = tape.use(params_.get("agent.w2"));
    v.agent.b2 = tape.use(params_.get("agent.b2"));
  }
  return v;
}

Var Seq2SeqModel::encode(Tape& tape, const std::vector<int>& tokens) {
  if (tokens.empty()) throw Error("encode: empty token sequence");
  for (int id : tokens)
    if (id < 0 || id >= config_.vocab)
      throw Error("encode: token id " + std::to_string(id) +
                  " outside vocab of size " + std::to_string(config_.vocab));
  vars_ = bind(tape);
  const int n = static_cast<int>(tokens.size());
  std::vector<Var> embedded(n);
  for (int i = 0; i < n; ++i)
    embedded[i] = selectRow(vars_.embedding, tokens[i]);

  std::vector<Var> fwd(n), bwd(n);
  Var h = tape.zeros(config_.enc_width);
  for (int i = 0; i < n; ++i) {
    h = ad::tanh(vars_.enc_fwd_wi * embedded[i] + vars_.enc_fwd_wh * h +
                 vars_.enc_fwd_b);
    fwd[i] = h;
  }
  h = tape.zeros(config_.enc_width);
  for (int i = n - 1; i >= 0; --i) {
    h = ad::tanh(vars_.enc_bwd_wi * embedded[i] + vars_.enc_bwd_wh * h +
                 vars_.enc_bwd_b);
    bwd[i] = h;
  }
  std::vector<Var> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = ad::vconcat({fwd[i], bwd[i]});
  return ad::stackRows(rows);
}

Seq2SeqModel::Sequence Seq2SeqModel::bindSequence(
    Tape& tape, const std::vector<int>& tokens) {
  Sequence seq;
  seq.x = encode(tape, tokens);
  seq.memory = attn::projectMemory(seq.x, vars_.attn);
  seq.n = static_cast<int>(tokens.size());
  return seq;
}

Seq2SeqModel::DecoderState Seq2SeqModel::initialState(Tape& tape,
                                                      const Sequence& seq) {
  DecoderState s;
  s.q = tape.zeros(config_.dec_width);
  s.context = tape.zeros(config_.encoderOutWidth());
  s.prev_frame = vars_.go_frame;
  s.forward = attn::ForwardState::initial(
      tape, seq.n, config_.mechanism == Mechanism::kForwardTa);
  s.feedback = tape.oneHot(seq.n, 0);
  return s;
}

DecoderStepOutput Seq2SeqModel::decodeStep(Tape& tape, const Sequence& seq,
                                           DecoderState& state, double bias) {
  Var cell_frame =
      config_.progress_to_cell
          ? state.prev_frame
          : ad::segment(state.prev_frame, 0, config_.frame_width - 1);
  Var cell_in = ad::vconcat({cell_frame, state.context});
  Var q = ad::tanh(vars_.dec_wi * cell_in + vars_.dec_wh * state.q +
                   vars_.dec_b);

  std::optional<attn::Window> window;
  Var conv_feats;
  if (config_.stabilizer == Stabilizer::kWindow)
    window = attn::windowAround(state.feedback.value(),
                                config_.window_halfwidth);
  else if (config_.stabilizer == Stabilizer::kConv)
    conv_feats = attn::convFeatures(state.feedback, vars_.attn.kernels);

  Var e = attn::energiesFromMemory(q, seq.memory, vars_.attn, conv_feats);
  Var y = attn::normalize(e, window);

  Var weights;
  switch (config_.mechanism) {
    case Mechanism::kBaseline:
      weights = y;
      break;
    case Mechanism::kForward:
      std::tie(weights, state.forward) = attn::forwardStep(state.forward, y);
      break;
    case Mechanism::kForwardTa:
      std::tie(weights, state.forward) = attn::forwardTaStep(state.forward, y);
      break;
  }

  Var c = attn::context(weights, seq.x);

  DecoderStepOutput out;
  if (config_.mechanism == Mechanism::kForwardTa) {
    // o_{t-1} is the frame fed to this step's cell, i.e. state.prev_frame.
    out.u = attn::transitionProb(c, state.prev_frame, q, vars_.agent, bias);
    state.forward.u = out.u;
  }

  Var proj_in = ad::vconcat({q, c});
  Var frames_flat = vars_.out_w * proj_in + vars_.out_b;
  out.frames.reserve(config_.reduction);
  for (int i = 0; i < config_.reduction; ++i)
    out.frames.push_back(ad::segment(frames_flat, i * config_.frame_width,
                                     config_.frame_width));
  out.stop_logit = vars_.stop_w * proj_in + vars_.stop_b;
  out.alignment = weights;

  state.q = q;
  state.context = c;
  state.feedback = (config_.feedback == attn::Feedback::kEmitted) ? weights : y;
  return out;
}

Var maeLoss(Var prediction, Var target) {
  return ad::mean(ad::cwiseAbs(prediction - target));
}

TeacherForcedResult Seq2SeqModel::teacherForced(
    Tape& tape, const std::vector<int>& tokens,
    const Eigen::MatrixXd& target_frames,
    const FeedbackCorruption* corruption) {
  if (target_frames.rows() < 1)
    throw Error("teacherForced: need at least one target frame");
  if (target_frames.cols() != config_.frame_width)
    throw ShapeError("teacherForced: target frame width " +
                     std::to_string(target_frames.cols()) + " != configured " +
                     std::to_string(config_.frame_width));
  const int r = config_.reduction;
  const int fw = config_.frame_width;
  const int total = static_cast<int>(target_frames.rows());
  const int steps = (total + r - 1) / r;

  // Pad the last group by repeating the final frame.
  Eigen::MatrixXd padded(steps * r, fw);
  for (int i = 0; i < steps * r; ++i)
    padded.row(i) = target_frames.row(std::min(i, total - 1));

  Sequence seq = bindSequence(tape, tokens);
  DecoderState state = initialState(tape, seq);

  TeacherForcedResult result;
  result.alignment.resize(steps, seq.n);
  result.predicted.resize(steps * r, fw);

  Var abs_acc = tape.scalar(0.0);
  Var stop_acc = tape.scalar(0.0);
  double u_acc = 0.0;
  for (int t = 0; t < steps; ++t) {
    DecoderStepOutput out = decodeStep(tape, seq, state);
    Eigen::MatrixXd group = padded.middleRows(t * r, r);
    Eigen::VectorXd flat(r * fw);
    for (int i = 0; i < r; ++i) flat.segment(i * fw, fw) = group.row(i);
    Var target = tape.constant(flat);
    Var pred = ad::vconcat(out.frames);
    abs_acc = abs_acc + ad::sum(ad::cwiseAbs(pred - target));
    stop_acc =
        stop_acc + ad::bceWithLogits(out.stop_logit,
                                     t == steps - 1 ? 1.0 : 0.0);
    result.alignment.row(t) = out.alignment.value().col(0);
    for (int i = 0; i < r; ++i)
      result.predicted.row(t * r + i) = out.frames[i].value().col(0);
    if (out.u.valid()) u_acc += out.u.scalarValue();
    // teacher forcing: feed the true last frame of this step's group,
    // optionally corrupted
    Eigen::VectorXd next = group.row(r - 1).transpose();
    if (corruption && corruption->rng) {
      if (corruption->dropout > 0.0 &&
          corruption->rng->uniform() < corruption->dropout) {
        next.setZero();
      } else if (corruption->noise > 0.0) {
        for (Eigen::Index i = 0; i < next.size(); ++i)
          next(i) += corruption->noise * corruption->rng->normal();
      }
    }
    state.prev_frame = tape.constant(std::move(next));
  }
  result.frame_loss =
      affine(abs_acc, 1.0 / static_cast<double>(steps * r * fw), 0.0);
  result.stop_loss = affine(stop_acc, 1.0 / static_cast<double>(steps), 0.0);
  result.loss = result.frame_loss + result.stop_loss;
  if (config_.mechanism == Mechanism::kForwardTa)
    result.mean_u = u_acc / static_cast<double>(steps);
  return result;
}

FreeRunResult Seq2SeqModel::freeRun(const std::vector<int>& tokens,
                                    double bias, int max_steps) {
  Tape tape(/*track_gradients=*/false);
  Sequence seq = bindSequence(tape, tokens);
  DecoderState state = initialState(tape, seq);
  const int r = config_.reduction;
  const int fw = config_.frame_width;

  FreeRunResult result;
  std::vector<Eigen::VectorXd> frames;
  std::vector<Eigen::VectorXd> aligns;
  std::vector<double> us;
  double u_acc = 0.0;
  bool stopped = false;
  int t = 0;
  for (; t < max_steps && !stopped; ++t) {
    DecoderStepOutput out = decodeStep(tape, seq, state, bias);
    for (int i = 0; i < r; ++i) frames.push_back(out.frames[i].value().col(0));
    aligns.push_back(out.alignment.value().col(0));
    if (out.u.valid()) {
      u_acc += out.u.scalarValue();
      us.push_back(out.u.scalarValue());
    }
    state.prev_frame = out.frames.back();
    // sigmoid(logit) > 0.5 is logit > 0
    stopped = out.stop_logit.scalarValue() > 0.0;
  }
  result.steps = t;
  result.truncated = !stopped;
  result.frames.resize(static_cast<Eigen::Index>(frames.size()), fw);
  for (std::size_t i = 0; i < frames.size(); ++i)
    result.frames.row(static_cast<Eigen::Index>(i)) = frames[i];
  result.alignment.resize(static_cast<Eigen::Index>(aligns.size()), seq.n);
  for (std::size_t i = 0; i < aligns.size(); ++i)
    result.alignment.row(static_cast<Eigen::Index>(i)) = aligns[i];
  result.u_trace.resize(static_cast<Eigen::Index>(us.size()));
  for (std::size_t i = 0; i < us.size(); ++i)
    result.u_trace(static_cast<Eigen::Index>(i)) = us[i];
  if (config_.mechanism == Mechanism::kForwardTa && t > 0)
    result.mean_u = u_acc / static_cast<double>(t);
  return result;
}

}  // namespace monoattn
