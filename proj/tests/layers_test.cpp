#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "monoattn/layers.hpp"
#include "util.hpp"

using namespace monoattn;
using testutil::rand_tensor;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill(Tensor t, double v) {
  for (double& x : t.data()) x = v;
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("linear init is Xavier-uniform with zero bias") {
  Rng rng(1);
  LinearParams p = make_linear(10, 30, rng);
  const double r = std::sqrt(6.0 / 40.0);
  double max_abs = 0.0;
  for (double v : p.weight.data()) {
    CHECK(std::fabs(v) <= r);
    max_abs = std::max(max_abs, std::fabs(v));
  }
  CHECK(max_abs > r / 10.0);  // actually spread out, not collapsed at zero
  for (double v : p.bias.data()) CHECK(v == 0.0);
  CHECK(p.weight.requires_grad());
  CHECK(p.bias.requires_grad());
}

TEST_CASE("linear vector and matrix paths agree") {
  Rng rng(2);
  LinearParams p = make_linear(5, 3, rng);
  Tensor x = rand_tensor({5}, rng);
  Tensor y_vec = linear(p, x);
  Tensor x2 = stack_rows({x, x});
  Tensor y_mat = linear(p, x2);
  CHECK(y_vec.ndim() == 1);
  CHECK(y_mat.ndim() == 2);
  for (int j = 0; j < 3; ++j) {
    CHECK(y_vec.data()[static_cast<std::size_t>(j)] == y_mat.data()[static_cast<std::size_t>(j)]);
    CHECK(y_vec.data()[static_cast<std::size_t>(j)] ==
          y_mat.data()[static_cast<std::size_t>(3 + j)]);
  }
}

TEST_CASE("linear gradients match finite differences") {
  Rng rng(3);
  LinearParams p = make_linear(4, 3, rng);
  Tensor x = rand_tensor({2, 4}, rng);
  std::vector<NamedParam> params = {{"w", p.weight}, {"b", p.bias}, {"x", x}};
  auto f = [&]() { return mean(tanh(linear(p, x))); };
  CHECK(grad_check(f, params, 1e-5) < 1e-6);
}

TEST_CASE("embedding rows and bounds") {
  Rng rng(4);
  EmbeddingParams p = make_embedding(6, 3, rng);
  CHECK(p.table.dim(0) == 6);
  Tensor e = embed(p, 4);
  for (int j = 0; j < 3; ++j)
    CHECK(e.data()[static_cast<std::size_t>(j)] ==
          p.table.data()[static_cast<std::size_t>(4 * 3 + j)]);

  Tensor seq = embed_seq(p, {1, 4, 4});
  CHECK(seq.dim(0) == 3);
  CHECK(seq.dim(1) == 3);

  CHECK_THROWS_AS(embed(p, 6), IndexError);
  CHECK_THROWS_AS(embed(p, -1), IndexError);
  CHECK_THROWS_AS(make_embedding(3, 4, rng), ShapeError);

  // Backward touches only the looked-up row (twice for the repeated id).
  GraphTape tape;
  Tensor s = sum(embed_seq(p, {4, 4}));
  tape.backward(s);
  CHECK(p.table.grad()[4 * 3] == 2.0);
  CHECK(p.table.grad()[0] == 0.0);
}

TEST_CASE("lstm cell gate order and forget bias") {
  Rng rng(5);
  LSTMCellParams p = make_lstm_cell(3, 4, rng);
  const int h = 4;
  // Freshly built: forget block of the bias is 1, everything else 0.
  for (int i = 0; i < 4 * h; ++i) {
    const double want = (i >= h && i < 2 * h) ? 1.0 : 0.0;
    CHECK(p.bias.data()[static_cast<std::size_t>(i)] == want);
  }

  // With zero weights the bias blocks drive the gates directly:
  // c = σ(b_i)·tanh(b_g) + σ(b_f)·c_prev, h = σ(b_o)·tanh(c).
  fill(p.w_x, 0.0);
  fill(p.w_h, 0.0);
  Tensor x = Tensor::zeros({3});
  Tensor h0 = Tensor::zeros({4});
  Tensor c0 = Tensor::from({4}, {1.0, -1.0, 2.0, 0.5});

  auto [h1, c1] = lstm_step(p, x, h0, c0);
  for (int i = 0; i < 4; ++i) {
    CHECK(c1.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(sig(1.0) * c0.data()[static_cast<std::size_t>(i)]).epsilon(1e-15));
    CHECK(h1.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(0.5 * std::tanh(c1.data()[static_cast<std::size_t>(i)])).epsilon(1e-15));
  }

  // Pin each block's role: open input+cell, slam forget+output shut.
  for (int i = 0; i < h; ++i) {
    p.bias.data()[static_cast<std::size_t>(i)] = 10.0;           // input
    p.bias.data()[static_cast<std::size_t>(h + i)] = -100.0;     // forget
    p.bias.data()[static_cast<std::size_t>(2 * h + i)] = 10.0;   // cell
    p.bias.data()[static_cast<std::size_t>(3 * h + i)] = -100.0; // output
  }
  auto [h2, c2] = lstm_step(p, x, h0, c0);
  for (int i = 0; i < 4; ++i) {
    CHECK(c2.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(sig(10.0) * std::tanh(10.0)).epsilon(1e-12));
    CHECK(std::fabs(h2.data()[static_cast<std::size_t>(i)]) < 1e-20);
  }
}

TEST_CASE("lstm gradients match finite differences over two chained steps") {
  Rng rng(6);
  LSTMCellParams p = make_lstm_cell(3, 4, rng);
  Tensor x1 = rand_tensor({3}, rng);
  Tensor x2 = rand_tensor({3}, rng);
  Tensor h0 = rand_tensor({4}, rng);
  Tensor c0 = rand_tensor({4}, rng);
  std::vector<NamedParam> params = {{"w_x", p.w_x}, {"w_h", p.w_h}, {"bias", p.bias},
                                    {"x1", x1},     {"x2", x2},     {"h0", h0},
                                    {"c0", c0}};
  auto f = [&]() {
    auto [h1, c1] = lstm_step(p, x1, h0, c0);
    auto [h2, c2] = lstm_step(p, x2, h1, c1);
    return add(sum(h2), mean(c2));
  };
  CHECK(grad_check(f, params, 1e-5) < 1e-5);
}

TEST_CASE("bilstm matches a manual forward and backward sweep") {
  Rng rng(7);
  EncoderStackParams stack = make_encoder_stack(3, 2, 1, {}, rng);
  Tensor x = rand_tensor({5, 3}, rng);
  Tensor out = bilstm_encode(stack, x);
  CHECK(out.dim(0) == 5);
  CHECK(out.dim(1) == 4);

  const LSTMCellParams& fc = stack.layers[0].fwd;
  const LSTMCellParams& bc = stack.layers[0].bwd;
  std::vector<Tensor> fwd(5), bwd(5);
  Tensor h = Tensor::zeros({2}), c = Tensor::zeros({2});
  for (int t = 0; t < 5; ++t) {
    auto [hn, cn] = lstm_step(fc, reshape(slice_rows(x, t, t + 1), {3}), h, c);
    fwd[static_cast<std::size_t>(t)] = hn;
    h = hn;
    c = cn;
  }
  h = Tensor::zeros({2});
  c = Tensor::zeros({2});
  for (int t = 4; t >= 0; --t) {
    auto [hn, cn] = lstm_step(bc, reshape(slice_rows(x, t, t + 1), {3}), h, c);
    bwd[static_cast<std::size_t>(t)] = hn;
    h = hn;
    c = cn;
  }
  for (int t = 0; t < 5; ++t)
    for (int j = 0; j < 2; ++j) {
      CHECK(out.data()[static_cast<std::size_t>(t * 4 + j)] ==
            doctest::Approx(fwd[static_cast<std::size_t>(t)].data()[static_cast<std::size_t>(j)])
                .epsilon(1e-14));
      CHECK(out.data()[static_cast<std::size_t>(t * 4 + 2 + j)] ==
            doctest::Approx(bwd[static_cast<std::size_t>(t)].data()[static_cast<std::size_t>(j)])
                .epsilon(1e-14));
    }
}

TEST_CASE("subsampling keeps even steps and halves lengths with ceil") {
  Rng rng(8);
  EncoderStackParams stack = make_encoder_stack(3, 2, 2, {0}, rng);
  Tensor x = rand_tensor({5, 3}, rng);
  Tensor out = bilstm_encode(stack, x);
  CHECK(out.dim(0) == 3);  // 5 -> keep steps 0,2,4
  CHECK(encoded_length(stack, 5) == 3);
  CHECK(encoded_length(stack, 4) == 2);

  EncoderStackParams both = make_encoder_stack(3, 2, 2, {0, 1}, rng);
  CHECK(encoded_length(both, 5) == 2);  // 5 -> 3 -> 2
  CHECK(encoded_length(both, 1) == 1);

  // Unsubsampled layers preserve length.
  CHECK(encoded_length(make_encoder_stack(3, 2, 3, {}, rng), 7) == 7);
}

TEST_CASE("bilstm stack gradients match finite differences") {
  Rng rng(9);
  EncoderStackParams stack = make_encoder_stack(3, 2, 2, {0}, rng);
  Tensor x = rand_tensor({4, 3}, rng);
  std::vector<NamedParam> params = {{"x", x}};
  int li = 0;
  for (auto& layer : stack.layers) {
    const std::string tag = "l" + std::to_string(li++);
    params.push_back({tag + ".fwd.w_x", layer.fwd.w_x});
    params.push_back({tag + ".fwd.w_h", layer.fwd.w_h});
    params.push_back({tag + ".fwd.bias", layer.fwd.bias});
    params.push_back({tag + ".bwd.w_x", layer.bwd.w_x});
    params.push_back({tag + ".bwd.w_h", layer.bwd.w_h});
    params.push_back({tag + ".bwd.bias", layer.bwd.bias});
  }
  auto f = [&]() { return mean(bilstm_encode(stack, x)); };
  CHECK(grad_check(f, params, 1e-5) < 1e-5);
}

TEST_CASE("adam first two steps on a unit gradient match hand values") {
  // m̂ = v̂ = 1 for every step with a constant unit gradient, so each step
  // moves by exactly lr/(1+eps).
  Tensor theta = Tensor::zeros({1}, true);
  std::vector<NamedParam> params = {{"theta", theta}};
  AdamState adam;
  adam.init(params);

  theta.ensure_grad();
  theta.grad()[0] = 1.0;
  adam_step(adam, params);
  CHECK(std::fabs(theta.data()[0] + 5e-4) < 1e-10);
  CHECK(adam.step == 1);

  theta.grad()[0] = 1.0;  // same gradient again
  adam_step(adam, params);
  CHECK(std::fabs(theta.data()[0] + 1e-3) < 1e-10);
}

TEST_CASE("adam refuses parameters that never received a gradient") {
  Tensor theta = Tensor::zeros({2}, true);
  std::vector<NamedParam> params = {{"pos.v_p", theta}};
  AdamState adam;
  adam.init(params);
  try {
    adam_step(adam, params);
    FAIL("expected UninitializedGradientError");
  } catch (const UninitializedGradientError& e) {
    CHECK(std::string(e.what()).find("pos.v_p") != std::string::npos);
  }
}

TEST_CASE("gradient clipping scales only above the threshold") {
  Tensor a = Tensor::from({2}, {0.0, 0.0}, true);
  a.ensure_grad();
  a.grad()[0] = 3.0;
  a.grad()[1] = 4.0;
  std::vector<NamedParam> params = {{"a", a}};

  CHECK(clip_grad_norm(params, 10.0) == doctest::Approx(5.0));
  CHECK(a.grad()[0] == 3.0);  // untouched below the threshold

  CHECK(clip_grad_norm(params, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad()[0] == doctest::Approx(0.6));
  CHECK(a.grad()[1] == doctest::Approx(0.8));
}

}  // TEST_SUITE
