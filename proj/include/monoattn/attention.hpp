#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "monoattn/ops.hpp"
#include "monoattn/rng.hpp"
#include "monoattn/tensor.hpp"

namespace monoattn {

enum class ScorerKind { Dot, Bilinear, Mlp, None };

struct ScorerParams {
  ScorerKind kind = ScorerKind::Dot;
  Tensor w_s;  // bilinear: [M×N]; mlp: [K×(M+N)]
  Tensor v_s;  // mlp: [K]
};

// m = encoder state width, n = decoder state width, k = mlp hidden size.
ScorerParams make_scorer(ScorerKind kind, int m, int n, int k, Rng& rng);

// Alignment energy of one encoder state against the decoder state:
// dot -> <h_e, h_d> (needs M == N); bilinear -> h_e^T W_s h_d;
// mlp -> V_s^T tanh(W_s [h_e; h_d]). Bumps the per-thread invocation
// counter; kind none is a caller branch, not a zero score.
Tensor score(const ScorerParams& scorer, const Tensor& h_e, const Tensor& h_d);

// Scorer invocations on this thread since the last reset.
std::uint64_t scorer_call_count();
void reset_scorer_call_count();

// Soft attention over a contiguous index window [window_lo, window_hi).
// weights has one entry per encoder state and is exactly zero outside the
// window; inside it is the softmax of the scores.
struct SoftmaxAttention {
  Tensor context;               // [M]
  std::vector<double> weights;  // [S]
  int window_lo = 0;
  int window_hi = 0;
};

// Scores every encoder state (S scorer invocations).
SoftmaxAttention global_attend(const ScorerParams& scorer, const Tensor& h_e_all,
                               const Tensor& h_d);

// Fixed-step local baseline: window of halfwidth d around center t, with the
// center clipped to the last encoder state when t runs past the end.
SoftmaxAttention local_m_attend(const ScorerParams& scorer, const Tensor& h_e_all,
                                const Tensor& h_d, int t, int d);

enum class PositionMode { Constrained, Unconstrained };

struct PositionPredictor {
  PositionMode mode = PositionMode::Constrained;
  Tensor w_p;       // [K×N], shared trunk of the delta and lambda heads
  Tensor v_p;       // [K]
  Tensor v_lambda;  // [K]
  double c_max = 5.0;
  double sigma = 1.5;        // Gaussian std; half the configured 2σ value
  int window_halfwidth = 3;  // round(2σ)
};

// two_sigma is the configured 2σ hyperparameter. V_p and V_lambda start at
// zero (Δp and λ sit at their neutral values until the heads move); the
// shared trunk W_p is Xavier-initialized.
PositionPredictor make_position_predictor(PositionMode mode, int n, int k, double c_max,
                                          double two_sigma, Rng& rng);

// hidden = tanh(W_p h_d), computed once for both heads.
// constrained: Δp = c_max·sigmoid(V_p^T hidden) ∈ [0, c_max];
// unconstrained: Δp = exp(V_p^T hidden) > 0. λ = exp(V_lambda^T hidden) > 0.
std::pair<Tensor, Tensor> predict_delta(const PositionPredictor& pp, const Tensor& h_d);

// Scaled Gaussian over the integer positions [lo, hi):
// a(s) = lambda·exp(-(s-p)²/(2σ²)), evaluated at the real-valued p.
std::vector<double> gaussian_prior(double p, double sigma, double lambda, int lo, int hi);

// Alignment center before the step; p only moves forward.
struct MonotonicState {
  double p = 0.0;
  // Graph node for p when the position came out of a recorded step, so later
  // priors backpropagate into earlier Δp. Undefined for a fresh sequence
  // (p_0 is a constant) or a hand-set position.
  Tensor p_node;
};

// One decode step's alignment artifacts. prior/likelihood/posterior are
// window-sized; positions outside [window_lo, window_hi) carry exactly zero
// weight. The posterior is left unnormalized.
struct AttentionOutput {
  Tensor context;  // [M]
  double p = 0.0;
  double delta_p = 0.0;
  double lambda = 0.0;
  std::vector<double> prior;       // a^N
  std::vector<double> likelihood;  // a^S (all ones when scorer kind is none)
  std::vector<double> posterior;   // a^N · a^S
  int window_lo = 0;
  int window_hi = 0;
};

// One local monotonic attention step:
//   p_t = state.p + Δp; window = [floor(p_t)-W, floor(p_t)+W] ∩ [0, S-1];
//   prior from the scaled Gaussian at the real-valued p_t; likelihood from a
//   softmax of scores over the window (ones when the scorer kind is none);
//   context = Σ_s prior(s)·likelihood(s)·h_e_all[s].
// Gradients flow through Δp, λ, the prior, and the likelihood; the window
// placement itself is a non-differentiable constant.
std::pair<AttentionOutput, MonotonicState> attend_local_monotonic(
    const MonotonicState& state, const PositionPredictor& pp, const ScorerParams& scorer,
    const Tensor& h_e_all, const Tensor& h_d);

}  // namespace monoattn
