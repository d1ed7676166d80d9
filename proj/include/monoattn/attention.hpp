#pragma once

#include <optional>
#include <string>

#include "monoattn/tape.hpp"

namespace monoattn::attn {

enum class Mechanism { kBaseline, kForward, kForwardTa };
enum class Stabilizer { kNone, kWindow, kConv };

// Which previous alignment is fed back to the stabilizers (window center,
// convolutional features). For the forward variants the emitted alignment is
// the normalized forward variable; the content distribution is the raw
// softmax output. For baseline attention the two coincide.
enum class Feedback { kEmitted, kContent };

Mechanism mechanismFromString(const std::string& s);
Stabilizer stabilizerFromString(const std::string& s);
Feedback feedbackFromString(const std::string& s);
std::string name(Mechanism m);
std::string name(Stabilizer s);
std::string name(Feedback f);

// Score parameters: e_n = score_v . tanh(query_w q + memory_w' x_n
// [+ conv_u' f_n] + bias). memory_w is stored as d_x x d_att and conv_u as
// k x d_att so the per-position terms come out of single matrix products.
// conv_u and kernels are either both bound or both null.
struct AttentionVars {
  ad::Var score_v;   // d_att
  ad::Var query_w;   // d_att x d_q
  ad::Var memory_w;  // d_x x d_att
  ad::Var bias;      // d_att
  ad::Var conv_u;    // k x d_att
  ad::Var kernels;   // k x l
  bool hasConv() const { return conv_u.valid(); }
};

// Inclusive index window, 0-based.
struct Window {
  int lo = 0;
  int hi = 0;
};

// Window of half-width w around the mode of the previous alignment. Ties
// break toward the larger index (favoring forward motion).
Window windowAround(const ad::Matrix& prev_align, int half_width);
int argmaxTieHigh(const ad::Matrix& weights);

// Memory term of the score function, constant across decoder steps.
ad::Var projectMemory(ad::Var x, const AttentionVars& p);

// Scores over encoder positions given the precomputed memory term.
// conv_feats is an N x k matrix (pass a null Var when unused).
ad::Var energiesFromMemory(ad::Var query, ad::Var memory,
                           const AttentionVars& p, ad::Var conv_feats = {});
// Same, from raw encoder outputs x (N x d_x).
ad::Var energies(ad::Var query, ad::Var x, const AttentionVars& p,
                 ad::Var conv_feats = {});

// Softmax over the (optionally windowed) index set; entries outside the
// window are exactly zero.
ad::Var normalize(ad::Var e, std::optional<Window> window = std::nullopt);

// Convolution of the previous alignment with the kernel bank: N x k.
ad::Var convFeatures(ad::Var prev_align, ad::Var kernels);

// Attention-weighted combination of encoder outputs.
ad::Var context(ad::Var weights, ad::Var x);

// Recurrent state of the forward recursions. At t = 0 the alignment is
// one-hot at the first position, and the transition probability is 1/2.
struct ForwardState {
  ad::Var alpha;  // emitted alignment of the previous step, length N
  ad::Var u;      // previous transition probability (transition agent only)
  int t = 0;

  static ForwardState initial(ad::Tape& tape, int n, bool with_agent);
};

// One step of the plain forward recursion:
//   alpha'(n) = (alpha_prev(n) + alpha_prev(n-1)) y(n),  alpha_prev(0) = 0
// renormalized to a simplex. Throws DegenerateAttentionError when all mass
// is annihilated (windowed y disjoint from the reachable support).
std::pair<ad::Var, ForwardState> forwardStep(const ForwardState& state,
                                             ad::Var y);

// Transition-agent variant:
//   alpha'(n) = ((1-u) alpha_prev(n) + u alpha_prev(n-1)) y(n)
// The returned state has no u yet; the caller computes u_t from the fresh
// context and assigns it.
std::pair<ad::Var, ForwardState> forwardTaStep(const ForwardState& state,
                                               ad::Var y);

// Transition agent: one tanh hidden layer, sigmoid output. The inference
// bias is added to the pre-sigmoid logit (zero during training).
struct AgentVars {
  ad::Var w1;  // hidden x (d_c + d_o + d_q)
  ad::Var b1;  // hidden
  ad::Var w2;  // 1 x hidden
  ad::Var b2;  // 1 x 1
};

ad::Var transitionProb(ad::Var context, ad::Var prev_frame, ad::Var query,
                       const AgentVars& agent, double bias);

// Iterates the forward recursion over a fixed trace of attention simplexes
// (rows of y) and optional transition probabilities, returning the T x N
// matrix of emitted alignments. Test/verification helper.
Eigen::MatrixXd runForwardRecursion(
    const Eigen::MatrixXd& y,
    const std::optional<Eigen::VectorXd>& u = std::nullopt);

// Same recursion without per-step renormalization, normalized once at the
// end (the two must agree: the update is linear in alpha).
Eigen::MatrixXd runForwardRecursionEndNormalized(
    const Eigen::MatrixXd& y,
    const std::optional<Eigen::VectorXd>& u = std::nullopt);

}  // namespace monoattn::attn
