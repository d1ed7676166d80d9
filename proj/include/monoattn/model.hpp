#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "monoattn/attention.hpp"
#include "monoattn/params.hpp"
#include "monoattn/task.hpp"

namespace monoattn {

struct ModelConfig {
  int vocab = 8;
  int embed_width = 16;
  int enc_width = 16;  // per direction; encoder outputs are 2x this wide
  int dec_width = 32;
  int attn_width = 32;
  int frame_width = 9;
  int reduction = 2;  // frames emitted per decoder step
  attn::Mechanism mechanism = attn::Mechanism::kForwardTa;
  attn::Stabilizer stabilizer = attn::Stabilizer::kNone;
  int window_halfwidth = 2;
  int conv_kernels = 10;
  int conv_kernel_len = 5;
  int agent_hidden = 32;
  attn::Feedback feedback = attn::Feedback::kEmitted;
  // Whether the decoder cell sees the fed-back frame's progress channel.
  // The transition agent always sees the full frame. Keeping the channel
  // away from the cell leaves transition timing to the alignment machinery
  // instead of a fragile read of the model's own frame predictions.
  bool progress_to_cell = false;
  std::uint64_t seed = 1;

  int encoderOutWidth() const { return 2 * enc_width; }
  int cellFrameWidth() const {
    return progress_to_cell ? frame_width : frame_width - 1;
  }
};

struct DecoderStepOutput {
  std::vector<ad::Var> frames;  // exactly `reduction` frame vectors
  ad::Var stop_logit;           // scalar
  ad::Var alignment;            // emitted attention weights, length N
  ad::Var u;                    // transition probability (fa-ta only)
};

struct TeacherForcedResult {
  ad::Var loss;        // frame_loss + stop_loss
  ad::Var frame_loss;  // mean absolute error over frames
  ad::Var stop_loss;   // mean binary cross-entropy over stop flags
  Eigen::MatrixXd alignment;  // T' x N emitted weights
  Eigen::MatrixXd predicted;  // (T' * r) x frame_width
  double mean_u = -1.0;       // mean transition probability, fa-ta only
};

struct FreeRunResult {
  Eigen::MatrixXd frames;     // (steps * r) x frame_width
  Eigen::MatrixXd alignment;  // steps x N
  Eigen::VectorXd u_trace;    // per-step transition probability (fa-ta)
  int steps = 0;
  bool truncated = false;  // hit max_steps without the stop predictor firing
  double mean_u = -1.0;
};

// Toy encoder-decoder around the attention mechanisms: bidirectional tanh
// encoder, single tanh decoder cell, grouped frame output (reduction trick),
// linear stop predictor, optional transition agent.
class Seq2SeqModel {
 public:
  explicit Seq2SeqModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  // Encoder outputs as an N x (2 * enc_width) matrix.
  ad::Var encode(ad::Tape& tape, const std::vector<int>& tokens);

  // Per-sequence bound state for decoding.
  struct Sequence {
    ad::Var x;       // N x d_x encoder outputs
    ad::Var memory;  // N x d_att precomputed memory projection
    int n = 0;
  };
  Sequence bindSequence(ad::Tape& tape, const std::vector<int>& tokens);

  // Decoder state. `initial` is the documented zero-state constructor: zero
  // recurrent state and context, one-hot alignment at the first encoder
  // position, transition probability 1/2, learned go frame as the first
  // decoder input.
  struct DecoderState {
    ad::Var q;           // recurrent state
    ad::Var context;     // previous context vector
    ad::Var prev_frame;  // last frame of the previously emitted group
    attn::ForwardState forward;  // alpha_hat_{t-1} (+ u_{t-1})
    ad::Var feedback;    // alignment fed to stabilizers next step
  };
  DecoderState initialState(ad::Tape& tape, const Sequence& seq);

  // One decoder step. Consumes state.prev_frame as the frame input; the
  // caller overwrites state.prev_frame afterwards (ground truth when teacher
  // forcing, own output when free-running). `bias` shifts the transition
  // agent's logit at inference time.
  DecoderStepOutput decodeStep(ad::Tape& tape, const Sequence& seq,
                               DecoderState& state, double bias = 0.0);

  // Training-time corruption of the fed-back ground-truth frame. Free
  // running feeds the model its own imperfect frames, so training on
  // pristine feedback alone leaves the decoder brittle; dropping or
  // jittering the teacher-forced input forces it to keep its own clock.
  struct FeedbackCorruption {
    Rng* rng = nullptr;
    double dropout = 0.0;  // probability of replacing the frame with zeros
    double noise = 0.0;    // stddev of Gaussian jitter on kept frames
  };

  TeacherForcedResult teacherForced(
      ad::Tape& tape, const std::vector<int>& tokens,
      const Eigen::MatrixXd& target_frames,
      const FeedbackCorruption* corruption = nullptr);

  FreeRunResult freeRun(const std::vector<int>& tokens, double bias,
                        int max_steps);

 private:
  struct BoundVars {
    ad::Var embedding;
    ad::Var enc_fwd_wi, enc_fwd_wh, enc_fwd_b;
    ad::Var enc_bwd_wi, enc_bwd_wh, enc_bwd_b;
    ad::Var dec_wi, dec_wh, dec_b;
    ad::Var out_w, out_b;
    ad::Var stop_w, stop_b;
    ad::Var go_frame;
    attn::AttentionVars attn;
    attn::AgentVars agent;
  };
  BoundVars bind(ad::Tape& tape);

  ModelConfig config_;
  ad::ParameterStore params_;
  // Parameter bindings for the current tape, rebuilt by encode().
  BoundVars vars_;
};

// Stand-alone loss pieces (exposed for tests).
ad::Var maeLoss(ad::Var prediction, ad::Var target);

}  // namespace monoattn
