#include "monoattn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace monoattn {

namespace {

thread_local std::uint64_t t_scorer_calls = 0;

Tensor xavier(int rows, int cols, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& v : data) v = rng.uniform(-r, r);
  return Tensor::from({rows, cols}, std::move(data), true);
}

Tensor row_of(const Tensor& m, int r) {
  return reshape(slice_rows(m, r, r + 1), {m.dim(1)});
}

void check_encoder(const Tensor& h_e_all) {
  if (h_e_all.ndim() != 2)
    throw ShapeError("attention: encoder states must be [S×M], got " +
                     shape_str(h_e_all.shape()));
  if (h_e_all.dim(0) < 1) throw EmptySequenceError("attention: no encoder states");
}

// Softmax attention restricted to rows [lo, hi) of the encoder states.
SoftmaxAttention windowed_softmax_attend(const ScorerParams& scorer, const Tensor& h_e_all,
                                         const Tensor& h_d, int lo, int hi) {
  const int s_len = h_e_all.dim(0);
  const int count = hi - lo;
  std::vector<Tensor> scores(static_cast<std::size_t>(count));
  for (int s = lo; s < hi; ++s)
    scores[static_cast<std::size_t>(s - lo)] = score(scorer, row_of(h_e_all, s), h_d);
  Tensor weights = softmax(concat(scores));
  Tensor window = slice_rows(h_e_all, lo, hi);
  Tensor context = reshape(matmul(reshape(weights, {1, count}), window), {h_e_all.dim(1)});

  SoftmaxAttention out;
  out.context = context;
  out.weights.assign(static_cast<std::size_t>(s_len), 0.0);
  for (int s = lo; s < hi; ++s)
    out.weights[static_cast<std::size_t>(s)] = weights.data()[static_cast<std::size_t>(s - lo)];
  out.window_lo = lo;
  out.window_hi = hi;
  return out;
}

}  // namespace

ScorerParams make_scorer(ScorerKind kind, int m, int n, int k, Rng& rng) {
  ScorerParams p;
  p.kind = kind;
  switch (kind) {
    case ScorerKind::Dot:
      if (m != n)
        throw ShapeError("dot scorer requires matching state widths, got M=" +
                         std::to_string(m) + " N=" + std::to_string(n));
      break;
    case ScorerKind::Bilinear:
      p.w_s = xavier(m, n, rng);
      break;
    case ScorerKind::Mlp: {
      p.w_s = xavier(k, m + n, rng);
      std::vector<double> v(static_cast<std::size_t>(k));
      const double r = std::sqrt(6.0 / static_cast<double>(k + 1));
      for (double& x : v) x = rng.uniform(-r, r);
      p.v_s = Tensor::from({k}, std::move(v), true);
      break;
    }
    case ScorerKind::None:
      break;
  }
  return p;
}

Tensor score(const ScorerParams& scorer, const Tensor& h_e, const Tensor& h_d) {
  ++t_scorer_calls;
  switch (scorer.kind) {
    case ScorerKind::Dot:
      if (h_e.dim(0) != h_d.dim(0))
        throw ShapeError("dot scorer: state widths differ, " + shape_str(h_e.shape()) +
                         " vs " + shape_str(h_d.shape()));
      return dot(h_e, h_d);
    case ScorerKind::Bilinear: {
      Tensor tmp = matmul(reshape(h_e, {1, h_e.dim(0)}), scorer.w_s);
      return dot(reshape(tmp, {scorer.w_s.dim(1)}), h_d);
    }
    case ScorerKind::Mlp: {
      Tensor cat = concat({h_e, h_d});
      Tensor hidden = tanh(matmul_nt(reshape(cat, {1, cat.dim(0)}), scorer.w_s));
      return dot(reshape(hidden, {scorer.w_s.dim(0)}), scorer.v_s);
    }
    case ScorerKind::None:
      break;
  }
  throw NotApplicableError("score: scorer kind 'none' has no energy; caller must branch");
}

std::uint64_t scorer_call_count() { return t_scorer_calls; }
void reset_scorer_call_count() { t_scorer_calls = 0; }

SoftmaxAttention global_attend(const ScorerParams& scorer, const Tensor& h_e_all,
                               const Tensor& h_d) {
  check_encoder(h_e_all);
  if (scorer.kind == ScorerKind::None)
    throw NotApplicableError("global_attend: requires a scorer");
  return windowed_softmax_attend(scorer, h_e_all, h_d, 0, h_e_all.dim(0));
}

SoftmaxAttention local_m_attend(const ScorerParams& scorer, const Tensor& h_e_all,
                                const Tensor& h_d, int t, int d) {
  check_encoder(h_e_all);
  if (scorer.kind == ScorerKind::None)
    throw NotApplicableError("local_m_attend: requires a scorer");
  if (t < 0) throw DomainError("local_m_attend: negative step index");
  if (d < 0) throw DomainError("local_m_attend: negative window halfwidth");
  const int s_len = h_e_all.dim(0);
  const int center = std::min(t, s_len - 1);
  const int lo = std::max(0, center - d);
  const int hi = std::min(s_len - 1, center + d) + 1;
  return windowed_softmax_attend(scorer, h_e_all, h_d, lo, hi);
}

PositionPredictor make_position_predictor(PositionMode mode, int n, int k, double c_max,
                                          double two_sigma, Rng& rng) {
  if (two_sigma <= 0.0)
    throw DomainError("position predictor: 2σ must be positive, got " +
                      std::to_string(two_sigma));
  if (mode == PositionMode::Constrained && c_max <= 0.0)
    throw DomainError("position predictor: C_max must be positive, got " +
                      std::to_string(c_max));
  PositionPredictor pp;
  pp.mode = mode;
  pp.w_p = xavier(k, n, rng);
  pp.v_p = Tensor::zeros({k}, true);
  pp.v_lambda = Tensor::zeros({k}, true);
  pp.c_max = c_max;
  pp.sigma = two_sigma / 2.0;
  pp.window_halfwidth = static_cast<int>(std::lround(two_sigma));
  if (pp.window_halfwidth < 1)
    throw DomainError("position predictor: 2σ=" + std::to_string(two_sigma) +
                      " rounds to a window halfwidth below 1");
  return pp;
}

std::pair<Tensor, Tensor> predict_delta(const PositionPredictor& pp, const Tensor& h_d) {
  Tensor hidden =
      reshape(tanh(matmul_nt(reshape(h_d, {1, h_d.dim(0)}), pp.w_p)), {pp.w_p.dim(0)});
  Tensor raw = dot(pp.v_p, hidden);
  Tensor delta = pp.mode == PositionMode::Constrained ? scale(sigmoid(raw), pp.c_max)
                                                      : monoattn::exp(raw);
  Tensor lambda = monoattn::exp(dot(pp.v_lambda, hidden));
  return {delta, lambda};
}

std::vector<double> gaussian_prior(double p, double sigma, double lambda, int lo, int hi) {
  if (sigma <= 0.0) throw DomainError("gaussian_prior: sigma must be positive");
  if (lambda <= 0.0) throw DomainError("gaussian_prior: lambda must be positive");
  if (hi <= lo) throw EmptySequenceError("gaussian_prior: empty index range");
  const double coef = -1.0 / (2.0 * sigma * sigma);
  std::vector<double> out(static_cast<std::size_t>(hi - lo));
  for (int s = lo; s < hi; ++s) {
    const double d = static_cast<double>(s) - p;
    out[static_cast<std::size_t>(s - lo)] = lambda * std::exp(d * d * coef);
  }
  return out;
}

std::pair<AttentionOutput, MonotonicState> attend_local_monotonic(
    const MonotonicState& state, const PositionPredictor& pp, const ScorerParams& scorer,
    const Tensor& h_e_all, const Tensor& h_d) {
  check_encoder(h_e_all);
  if (state.p < 0.0) throw DomainError("attend_local_monotonic: alignment center < 0");
  const int s_len = h_e_all.dim(0);
  const int m = h_e_all.dim(1);

  auto [delta, lambda] = predict_delta(pp, h_d);
  // Carry the recorded position forward when we have one so the whole
  // p_t = p_{t-1} + Δp_t chain stays differentiable across steps.
  Tensor p_t = state.p_node.defined() ? add(state.p_node, delta)
                                      : add_const(delta, state.p);
  const double p_val = p_t.value();

  const int center = std::clamp(static_cast<int>(std::floor(p_val)), 0, s_len - 1);
  const int w = pp.window_halfwidth;
  const int lo = std::max(0, center - w);
  const int hi = std::min(s_len - 1, center + w) + 1;
  const int count = hi - lo;

  // Prior: the scaled Gaussian, kept on the graph so gradients reach the
  // position and scale heads. Same arithmetic as gaussian_prior().
  std::vector<double> positions(static_cast<std::size_t>(count));
  for (int s = lo; s < hi; ++s)
    positions[static_cast<std::size_t>(s - lo)] = static_cast<double>(s);
  Tensor pos = Tensor::from({count}, std::move(positions));
  Tensor diff = sub(pos, expand(p_t, count));
  Tensor gauss = monoattn::exp(scale(mul(diff, diff), -1.0 / (2.0 * pp.sigma * pp.sigma)));
  Tensor prior = mul(expand(lambda, count), gauss);

  Tensor likelihood;
  if (scorer.kind == ScorerKind::None) {
    likelihood = Tensor::from({count}, std::vector<double>(static_cast<std::size_t>(count), 1.0));
  } else {
    std::vector<Tensor> scores(static_cast<std::size_t>(count));
    for (int s = lo; s < hi; ++s)
      scores[static_cast<std::size_t>(s - lo)] = score(scorer, row_of(h_e_all, s), h_d);
    likelihood = softmax(concat(scores));
  }

  Tensor posterior = mul(prior, likelihood);
  Tensor window = slice_rows(h_e_all, lo, hi);
  Tensor context = reshape(matmul(reshape(posterior, {1, count}), window), {m});

  AttentionOutput out;
  out.context = context;
  out.p = p_val;
  out.delta_p = delta.value();
  out.lambda = lambda.value();
  out.prior = prior.data();
  out.likelihood = likelihood.data();
  out.posterior = posterior.data();
  out.window_lo = lo;
  out.window_hi = hi;
  return {out, MonotonicState{p_val, p_t}};
}

}  // namespace monoattn
