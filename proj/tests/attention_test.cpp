#include <cmath>
#include <vector>

#include "doctest.h"
#include "monoattn/attention.hpp"
#include "monoattn/gradcheck.hpp"
#include "util.hpp"

using namespace monoattn;
using testutil::rand_tensor;

namespace {

// Full-length reference: score every position, softmax under a window mask,
// multiply by the full-length Gaussian, zero outside the window — all in
// plain doubles.
struct FullRef {
  std::vector<double> posterior;  // length S
  std::vector<double> context;    // length M
};

FullRef full_length_reference(const PositionPredictor& pp, const ScorerParams& scorer,
                              const Tensor& h_e_all, const Tensor& h_d, double p,
                              double lambda, int lo, int hi) {
  const int s_len = h_e_all.dim(0);
  const int m = h_e_all.dim(1);
  std::vector<double> energy(static_cast<std::size_t>(s_len), 0.0);
  if (scorer.kind != ScorerKind::None) {
    for (int s = 0; s < s_len; ++s) {
      Tensor row = reshape(slice_rows(h_e_all, s, s + 1), {m});
      energy[static_cast<std::size_t>(s)] = score(scorer, row, h_d).value();
    }
  }
  std::vector<double> like(static_cast<std::size_t>(s_len), 0.0);
  if (scorer.kind == ScorerKind::None) {
    for (int s = lo; s < hi; ++s) like[static_cast<std::size_t>(s)] = 1.0;
  } else {
    double mx = -1e300;
    for (int s = lo; s < hi; ++s) mx = std::max(mx, energy[static_cast<std::size_t>(s)]);
    double z = 0.0;
    for (int s = lo; s < hi; ++s) {
      like[static_cast<std::size_t>(s)] = std::exp(energy[static_cast<std::size_t>(s)] - mx);
      z += like[static_cast<std::size_t>(s)];
    }
    for (int s = lo; s < hi; ++s) like[static_cast<std::size_t>(s)] /= z;
  }

  FullRef ref;
  ref.posterior.assign(static_cast<std::size_t>(s_len), 0.0);
  for (int s = lo; s < hi; ++s) {
    const double d = static_cast<double>(s) - p;
    const double prior = lambda * std::exp(-d * d / (2.0 * pp.sigma * pp.sigma));
    ref.posterior[static_cast<std::size_t>(s)] = prior * like[static_cast<std::size_t>(s)];
  }
  ref.context.assign(static_cast<std::size_t>(m), 0.0);
  for (int s = 0; s < s_len; ++s)
    for (int j = 0; j < m; ++j)
      ref.context[static_cast<std::size_t>(j)] +=
          ref.posterior[static_cast<std::size_t>(s)] *
          h_e_all.data()[static_cast<std::size_t>(s) * m + j];
  return ref;
}

PositionPredictor random_predictor(PositionMode mode, int n, int k, double c_max,
                                   double two_sigma, Rng& rng, double head_scale) {
  PositionPredictor pp = make_position_predictor(mode, n, k, c_max, two_sigma, rng);
  for (double& v : pp.v_p.data()) v = rng.uniform(-head_scale, head_scale);
  for (double& v : pp.v_lambda.data()) v = rng.uniform(-head_scale, head_scale);
  return pp;
}

double dist_to_int(double x) { return std::fabs(x - std::round(x)); }

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("dot scorer is the inner product and demands matching widths") {
  Rng rng(1);
  ScorerParams sc = make_scorer(ScorerKind::Dot, 3, 3, 0, rng);
  Tensor h_e = Tensor::from({3}, {1.0, 0.0, 2.0});
  Tensor h_d = Tensor::from({3}, {0.5, 1.0, 0.25});
  CHECK(score(sc, h_e, h_d).value() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(make_scorer(ScorerKind::Dot, 4, 3, 0, rng), ShapeError);
}

TEST_CASE("bilinear scorer with identity weight reduces to dot") {
  Rng rng(2);
  ScorerParams bi = make_scorer(ScorerKind::Bilinear, 3, 3, 0, rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      bi.w_s.data()[static_cast<std::size_t>(i * 3 + j)] = (i == j) ? 1.0 : 0.0;
  Tensor h_e = rand_tensor({3}, rng);
  Tensor h_d = rand_tensor({3}, rng);
  double want = 0.0;
  for (int i = 0; i < 3; ++i) want += h_e.data()[static_cast<std::size_t>(i)] * h_d.data()[static_cast<std::size_t>(i)];
  CHECK(score(bi, h_e, h_d).value() == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("scorer gradients match finite differences") {
  Rng rng(3);
  for (ScorerKind kind : {ScorerKind::Dot, ScorerKind::Bilinear, ScorerKind::Mlp}) {
    ScorerParams sc = make_scorer(kind, 4, 4, 3, rng);
    Tensor h_e = rand_tensor({4}, rng);
    Tensor h_d = rand_tensor({4}, rng);
    std::vector<NamedParam> params = {{"h_e", h_e}, {"h_d", h_d}};
    if (sc.w_s.defined()) params.push_back({"w_s", sc.w_s});
    if (sc.v_s.defined()) params.push_back({"v_s", sc.v_s});
    auto f = [&]() { return score(sc, h_e, h_d); };
    CHECK(grad_check(f, params, 1e-5) < 1e-6);
  }
}

TEST_CASE("scorer kind none is a branch, not an energy") {
  Rng rng(4);
  ScorerParams none = make_scorer(ScorerKind::None, 4, 4, 0, rng);
  Tensor h = rand_tensor({4}, rng);
  CHECK_THROWS_AS(score(none, h, h), NotApplicableError);
  Tensor he = rand_tensor({3, 4}, rng);
  CHECK_THROWS_AS(global_attend(none, he, h), NotApplicableError);
  CHECK_THROWS_AS(local_m_attend(none, he, h, 0, 1), NotApplicableError);
}

TEST_CASE("invocation counter tallies per scored position") {
  Rng rng(5);
  ScorerParams sc = make_scorer(ScorerKind::Mlp, 4, 4, 3, rng);
  Tensor he = rand_tensor({6, 4}, rng);
  Tensor hd = rand_tensor({4}, rng);
  reset_scorer_call_count();
  global_attend(sc, he, hd);
  CHECK(scorer_call_count() == 6);
  local_m_attend(sc, he, hd, 0, 2);  // window [0,3)
  CHECK(scorer_call_count() == 9);
  reset_scorer_call_count();
  CHECK(scorer_call_count() == 0);
}

TEST_CASE("global attention weights form a distribution and build the context") {
  Rng rng(6);
  ScorerParams sc = make_scorer(ScorerKind::Bilinear, 5, 4, 0, rng);
  Tensor he = rand_tensor({7, 5}, rng);
  Tensor hd = rand_tensor({4}, rng);
  SoftmaxAttention att = global_attend(sc, he, hd);
  CHECK(att.window_lo == 0);
  CHECK(att.window_hi == 7);
  double total = 0.0;
  std::vector<double> ctx(5, 0.0);
  for (int s = 0; s < 7; ++s) {
    CHECK(att.weights[static_cast<std::size_t>(s)] >= 0.0);
    total += att.weights[static_cast<std::size_t>(s)];
    for (int j = 0; j < 5; ++j)
      ctx[static_cast<std::size_t>(j)] += att.weights[static_cast<std::size_t>(s)] *
                                          he.data()[static_cast<std::size_t>(s * 5 + j)];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (int j = 0; j < 5; ++j)
    CHECK(att.context.data()[static_cast<std::size_t>(j)] ==
          doctest::Approx(ctx[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

TEST_CASE("fixed-step local window clips at both ends") {
  Rng rng(7);
  ScorerParams sc = make_scorer(ScorerKind::Mlp, 4, 4, 3, rng);
  Tensor he = rand_tensor({4, 4}, rng);
  Tensor hd = rand_tensor({4}, rng);

  SoftmaxAttention a0 = local_m_attend(sc, he, hd, 0, 2);
  CHECK(a0.window_lo == 0);
  CHECK(a0.window_hi == 3);

  // Step index past the end: center clips to the last state.
  SoftmaxAttention a9 = local_m_attend(sc, he, hd, 9, 1);
  CHECK(a9.window_lo == 2);
  CHECK(a9.window_hi == 4);
  CHECK(a9.weights[0] == 0.0);
  CHECK(a9.weights[1] == 0.0);
}

TEST_CASE("position heads start neutral") {
  Rng rng(8);
  Tensor hd = rand_tensor({6}, rng);

  PositionPredictor con = make_position_predictor(PositionMode::Constrained, 6, 4, 5.0, 3.0, rng);
  auto [dc, lc] = predict_delta(con, hd);
  CHECK(dc.value() == 2.5);  // c_max·sigmoid(0), exactly
  CHECK(lc.value() == 1.0);  // exp(0)

  PositionPredictor un = make_position_predictor(PositionMode::Unconstrained, 6, 4, 5.0, 3.0, rng);
  auto [du, lu] = predict_delta(un, hd);
  CHECK(du.value() == 1.0);  // exp(0)
  CHECK(lu.value() == 1.0);

  CHECK(con.sigma == 1.5);
  CHECK(con.window_halfwidth == 3);
  CHECK_THROWS_AS(make_position_predictor(PositionMode::Constrained, 6, 4, 5.0, 0.0, rng),
                  DomainError);
  CHECK_THROWS_AS(make_position_predictor(PositionMode::Constrained, 6, 4, -1.0, 3.0, rng),
                  DomainError);
  CHECK_THROWS_AS(make_position_predictor(PositionMode::Constrained, 6, 4, 5.0, 0.3, rng),
                  DomainError);
}

TEST_CASE("delta stays in range for random heads") {
  Rng rng(9);
  for (int draw = 0; draw < 300; ++draw) {
    const double c_max = rng.uniform(0.5, 6.0);
    PositionPredictor con =
        random_predictor(PositionMode::Constrained, 5, 4, c_max, 3.0, rng, 2.0);
    PositionPredictor un =
        random_predictor(PositionMode::Unconstrained, 5, 4, c_max, 3.0, rng, 2.0);
    Tensor hd = rand_tensor({5}, rng, -3.0, 3.0);
    auto [dc, lc] = predict_delta(con, hd);
    CHECK(dc.value() >= 0.0);
    CHECK(dc.value() <= c_max);
    CHECK(lc.value() > 0.0);
    auto [du, lu] = predict_delta(un, hd);
    CHECK(du.value() > 0.0);
    CHECK(lu.value() > 0.0);
  }
}

TEST_CASE("position head gradients match finite differences") {
  Rng rng(10);
  for (PositionMode mode : {PositionMode::Constrained, PositionMode::Unconstrained}) {
    PositionPredictor pp = random_predictor(mode, 5, 4, 4.0, 3.0, rng, 1.0);
    Tensor hd = rand_tensor({5}, rng);
    std::vector<NamedParam> params = {
        {"w_p", pp.w_p}, {"v_p", pp.v_p}, {"v_lambda", pp.v_lambda}, {"h_d", hd}};
    auto f = [&]() {
      auto [delta, lambda] = predict_delta(pp, hd);
      return add(delta, scale(lambda, 0.7));
    };
    CHECK(grad_check(f, params, 1e-5) < 1e-6);
  }
}

TEST_CASE("gaussian prior peaks at p, is symmetric, and scales by lambda") {
  std::vector<double> a = gaussian_prior(3.0, 1.5, 2.0, 0, 7);
  CHECK(a[3] == 2.0);           // exp(0) exactly
  CHECK(a[2] == a[4]);          // symmetry around integer p
  CHECK(a[0] == a[6]);
  CHECK(a[5] == doctest::Approx(0.8222245810143749).epsilon(1e-15));  // 2·exp(-8/9)
  for (double v : a) CHECK(v <= 2.0);

  std::vector<double> half = gaussian_prior(3.0, 1.5, 2.0, 2, 5);
  CHECK(half.size() == 3);
  CHECK(half[1] == 2.0);

  CHECK_THROWS_AS(gaussian_prior(3.0, 0.0, 1.0, 0, 5), DomainError);
  CHECK_THROWS_AS(gaussian_prior(3.0, 1.0, 0.0, 0, 5), DomainError);
  CHECK_THROWS_AS(gaussian_prior(3.0, 1.0, 1.0, 5, 5), EmptySequenceError);
}

TEST_CASE("local monotonic window placement follows floor(p) and clips") {
  Rng rng(11);
  ScorerParams none = make_scorer(ScorerKind::None, 6, 5, 0, rng);
  PositionPredictor pp = make_position_predictor(PositionMode::Unconstrained, 5, 4, 5.0, 3.0, rng);
  Tensor he = rand_tensor({20, 6}, rng);
  Tensor hd = rand_tensor({5}, rng);

  // Neutral heads give Δp = 1 exactly, so p = 4.7 + 1 = 5.7, floor 5.
  auto [att, next] = attend_local_monotonic(MonotonicState{4.7}, pp, none, he, hd);
  CHECK(att.p == doctest::Approx(5.7).epsilon(1e-15));
  CHECK(att.delta_p == 1.0);
  CHECK(att.lambda == 1.0);
  CHECK(att.window_lo == 2);
  CHECK(att.window_hi == 9);  // [5-3, 5+3] inclusive
  CHECK(next.p == att.p);

  // Left clip at the start.
  auto [att0, n0] = attend_local_monotonic(MonotonicState{0.0}, pp, none, he, hd);
  CHECK(att0.window_lo == 0);
  CHECK(att0.window_hi == 5);  // [max(0,1-3), 1+3]

  // Right clip at the end.
  auto [attN, nN] = attend_local_monotonic(MonotonicState{18.6}, pp, none, he, hd);
  CHECK(attN.window_hi == 20);
  CHECK(attN.window_lo == 16);

  // Center clamps even when p runs past the source.
  auto [attF, nF] = attend_local_monotonic(MonotonicState{40.0}, pp, none, he, hd);
  CHECK(attF.window_lo == 16);
  CHECK(attF.window_hi == 20);

  CHECK_THROWS_AS(attend_local_monotonic(MonotonicState{-0.5}, pp, none, he, hd), DomainError);
}

TEST_CASE("prior, likelihood, and posterior obey their definitions") {
  Rng rng(12);
  ScorerParams sc = make_scorer(ScorerKind::Mlp, 6, 5, 4, rng);
  PositionPredictor pp = random_predictor(PositionMode::Unconstrained, 5, 4, 5.0, 3.0, rng, 0.8);
  Tensor he = rand_tensor({15, 6}, rng);
  Tensor hd = rand_tensor({5}, rng);
  auto [att, next] = attend_local_monotonic(MonotonicState{3.2}, pp, sc, he, hd);

  const std::size_t count = att.posterior.size();
  CHECK(count == static_cast<std::size_t>(att.window_hi - att.window_lo));
  CHECK(count <= 7);

  // Prior equals the plain-double Gaussian helper bit for bit.
  std::vector<double> want_prior =
      gaussian_prior(att.p, pp.sigma, att.lambda, att.window_lo, att.window_hi);
  double like_sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    CHECK(att.prior[i] == want_prior[i]);
    CHECK(att.prior[i] <= att.lambda);
    CHECK(att.likelihood[i] > 0.0);
    like_sum += att.likelihood[i];
    CHECK(att.posterior[i] == att.prior[i] * att.likelihood[i]);
  }
  CHECK(like_sum == doctest::Approx(1.0).epsilon(1e-12));

  // Without a scorer the likelihood is identically one.
  ScorerParams none = make_scorer(ScorerKind::None, 6, 5, 0, rng);
  auto [att2, n2] = attend_local_monotonic(MonotonicState{3.2}, pp, none, he, hd);
  for (std::size_t i = 0; i < att2.likelihood.size(); ++i) {
    CHECK(att2.likelihood[i] == 1.0);
    CHECK(att2.posterior[i] == att2.prior[i]);
  }
}

TEST_CASE("windowed computation equals the masked full-length reference") {
  Rng rng(13);
  int checked = 0;
  for (int draw = 0; draw < 40; ++draw) {
    const int s_len = 4 + static_cast<int>(rng.next_u64() % 20);
    const int m = 3 + static_cast<int>(rng.next_u64() % 4);
    const int n = 3 + static_cast<int>(rng.next_u64() % 4);
    const ScorerKind kind = draw % 3 == 0   ? ScorerKind::None
                            : draw % 3 == 1 ? ScorerKind::Bilinear
                                            : ScorerKind::Mlp;
    ScorerParams sc = make_scorer(kind, m, n, 3, rng);
    PositionPredictor pp =
        random_predictor(PositionMode::Unconstrained, n, 4, 5.0, 3.0, rng, 1.0);
    Tensor he = rand_tensor({s_len, m}, rng);
    Tensor hd = rand_tensor({n}, rng);
    const double p0 = rng.uniform(0.0, static_cast<double>(s_len));

    auto [att, next] = attend_local_monotonic(MonotonicState{p0}, pp, sc, he, hd);
    FullRef ref = full_length_reference(pp, sc, he, hd, att.p, att.lambda, att.window_lo,
                                        att.window_hi);
    for (int s = 0; s < s_len; ++s) {
      const double got = (s >= att.window_lo && s < att.window_hi)
                             ? att.posterior[static_cast<std::size_t>(s - att.window_lo)]
                             : 0.0;
      CHECK(std::fabs(got - ref.posterior[static_cast<std::size_t>(s)]) < 1e-12);
    }
    for (int j = 0; j < m; ++j)
      CHECK(std::fabs(att.context.data()[static_cast<std::size_t>(j)] -
                      ref.context[static_cast<std::size_t>(j)]) < 1e-12);
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("no gradient leaks outside the window") {
  Rng rng(14);
  ScorerParams sc = make_scorer(ScorerKind::Mlp, 5, 4, 3, rng);
  PositionPredictor pp = random_predictor(PositionMode::Unconstrained, 4, 3, 5.0, 3.0, rng, 0.5);
  Tensor he = rand_tensor({16, 5}, rng);
  Tensor hd = rand_tensor({4}, rng);
  he.zero_grad();

  GraphTape tape;
  auto [att, next] = attend_local_monotonic(MonotonicState{6.3}, pp, sc, he, hd);
  tape.backward(sum(att.context));

  REQUIRE(att.window_lo > 0);
  REQUIRE(att.window_hi < 16);
  bool inside_nonzero = false;
  for (int s = 0; s < 16; ++s)
    for (int j = 0; j < 5; ++j) {
      const double g = he.grad()[static_cast<std::size_t>(s * 5 + j)];
      if (s < att.window_lo || s >= att.window_hi)
        CHECK(g == 0.0);
      else if (g != 0.0)
        inside_nonzero = true;
    }
  CHECK(inside_nonzero);
}

TEST_CASE("alignment center only moves forward") {
  Rng rng(15);
  for (int draw = 0; draw < 120; ++draw) {
    const int s_len = 6 + static_cast<int>(rng.next_u64() % 30);
    const double c_max = 0.5 + rng.uniform(0.0, 5.0);
    for (PositionMode mode : {PositionMode::Constrained, PositionMode::Unconstrained}) {
      PositionPredictor pp = random_predictor(mode, 4, 3, c_max, 3.0, rng, 2.5);
      ScorerParams none = make_scorer(ScorerKind::None, 5, 4, 0, rng);
      Tensor he = rand_tensor({s_len, 5}, rng, -2.0, 2.0);
      MonotonicState state;
      double prev_p = 0.0;
      for (int t = 0; t < 6; ++t) {
        Tensor hd = rand_tensor({4}, rng, -3.0, 3.0);
        auto [att, next] = attend_local_monotonic(state, pp, none, he, hd);
        if (mode == PositionMode::Constrained) {
          CHECK(att.p >= prev_p);
          CHECK(att.delta_p >= 0.0);
          CHECK(att.delta_p <= c_max);
        } else {
          CHECK(att.p > prev_p);
          CHECK(att.delta_p > 0.0);
        }
        prev_p = att.p;
        state = next;
      }
    }
  }
}

TEST_CASE("full attention step gradients match finite differences") {
  Rng rng(16);
  for (PositionMode mode : {PositionMode::Constrained, PositionMode::Unconstrained}) {
    for (ScorerKind kind : {ScorerKind::Mlp, ScorerKind::None}) {
      // Redraw until p_t sits safely away from an integer: the window
      // placement jumps there, and finite differences would straddle it.
      for (std::uint64_t sub = 0;; ++sub) {
        Rng draw(Rng::mix(17 + static_cast<std::uint64_t>(mode == PositionMode::Constrained),
                          Rng::mix(sub, kind == ScorerKind::Mlp ? 1 : 2)));
        ScorerParams sc = make_scorer(kind, 5, 4, 3, draw);
        PositionPredictor pp = random_predictor(mode, 4, 3, 4.0, 3.0, draw, 0.7);
        Tensor he = rand_tensor({12, 5}, draw);
        Tensor hd = rand_tensor({4}, draw);
        Tensor probe = rand_tensor({5}, draw, -1.0, 1.0, false);
        const double p0 = draw.uniform(0.5, 7.5);

        auto [att0, n0] = attend_local_monotonic(MonotonicState{p0}, pp, sc, he, hd);
        if (dist_to_int(att0.p) < 2e-2) continue;

        std::vector<NamedParam> params = {{"w_p", pp.w_p},
                                          {"v_p", pp.v_p},
                                          {"v_lambda", pp.v_lambda},
                                          {"h_d", hd},
                                          {"h_e", he}};
        if (sc.w_s.defined()) params.push_back({"w_s", sc.w_s});
        if (sc.v_s.defined()) params.push_back({"v_s", sc.v_s});
        auto f = [&]() {
          auto [att, next] = attend_local_monotonic(MonotonicState{p0}, pp, sc, he, hd);
          return dot(att.context, probe);
        };
        CHECK(grad_check(f, params, 1e-5) < 1e-4);
        break;
      }
    }
  }
}

TEST_CASE("scorer work scales with the window, not the source") {
  Rng rng(18);
  ScorerParams sc = make_scorer(ScorerKind::Mlp, 4, 4, 3, rng);
  PositionPredictor pp = make_position_predictor(PositionMode::Unconstrained, 4, 3, 5.0, 3.0, rng);
  Tensor hd = rand_tensor({4}, rng);
  std::uint64_t local_calls = 0;
  for (int s_len : {10, 100, 1000}) {
    Tensor he = rand_tensor({s_len, 4}, rng);
    reset_scorer_call_count();
    global_attend(sc, he, hd);
    CHECK(scorer_call_count() == static_cast<std::uint64_t>(s_len));

    reset_scorer_call_count();
    attend_local_monotonic(MonotonicState{4.2}, pp, sc, he, hd);
    CHECK(scorer_call_count() <= 7);
    if (local_calls == 0)
      local_calls = scorer_call_count();
    else
      CHECK(scorer_call_count() == local_calls);  // independent of S
  }
  reset_scorer_call_count();
}

}  // TEST_SUITE
