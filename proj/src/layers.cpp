#include "monoattn/layers.hpp"

#include <cmath>
#include <string>

namespace monoattn {

namespace {

Tensor xavier_uniform(int rows, int cols, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& v : data) v = rng.uniform(-r, r);
  return Tensor::from({rows, cols}, std::move(data), true);
}

}  // namespace

LinearParams make_linear(int in, int out, Rng& rng) {
  LinearParams p;
  p.weight = xavier_uniform(out, in, rng);
  p.bias = Tensor::zeros({out}, true);
  return p;
}

Tensor linear(const LinearParams& p, const Tensor& x) {
  const int in = p.weight.dim(1);
  if (x.ndim() == 1) {
    if (x.dim(0) != in)
      throw ShapeError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                       shape_str(p.weight.shape()));
    Tensor row = reshape(x, {1, in});
    Tensor y = add(matmul_nt(row, p.weight), p.bias);
    return reshape(y, {p.weight.dim(0)});
  }
  if (x.ndim() == 2 && x.dim(1) == in) return add(matmul_nt(x, p.weight), p.bias);
  throw ShapeError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                   shape_str(p.weight.shape()));
}

EmbeddingParams make_embedding(int vocab, int dim, Rng& rng) {
  if (vocab < 4)
    throw ShapeError("embedding: vocab must be >= 4 (pad/unk/sos/eos), got " +
                     std::to_string(vocab));
  return {xavier_uniform(vocab, dim, rng)};
}

Tensor embed(const EmbeddingParams& p, int id) {
  return reshape(take_rows(p.table, {id}), {p.table.dim(1)});
}

Tensor embed_seq(const EmbeddingParams& p, const std::vector<int>& ids) {
  if (ids.empty()) throw EmptySequenceError("embed_seq: empty id sequence");
  return take_rows(p.table, ids);
}

LSTMCellParams make_lstm_cell(int in, int hidden, Rng& rng) {
  LSTMCellParams p;
  p.w_x = xavier_uniform(4 * hidden, in, rng);
  p.w_h = xavier_uniform(4 * hidden, hidden, rng);
  std::vector<double> bias(static_cast<std::size_t>(4 * hidden), 0.0);
  for (int i = hidden; i < 2 * hidden; ++i) bias[static_cast<std::size_t>(i)] = 1.0;
  p.bias = Tensor::from({4 * hidden}, std::move(bias), true);
  p.hidden = hidden;
  p.input = in;
  return p;
}

std::pair<Tensor, Tensor> lstm_step(const LSTMCellParams& p, const Tensor& x,
                                    const Tensor& h_prev, const Tensor& c_prev) {
  const int h = p.hidden;
  if (x.ndim() != 1 || x.dim(0) != p.input)
    throw ShapeError("lstm_step: input " + shape_str(x.shape()) + " does not match cell input " +
                     std::to_string(p.input));
  if (h_prev.ndim() != 1 || h_prev.dim(0) != h || c_prev.ndim() != 1 || c_prev.dim(0) != h)
    throw ShapeError("lstm_step: state shapes " + shape_str(h_prev.shape()) + "/" +
                     shape_str(c_prev.shape()) + " do not match hidden " + std::to_string(h));
  Tensor gx = matmul_nt(reshape(x, {1, p.input}), p.w_x);
  Tensor gh = matmul_nt(reshape(h_prev, {1, h}), p.w_h);
  Tensor gates = reshape(add(add(gx, gh), p.bias), {4 * h});
  Tensor i = sigmoid(slice_rows(gates, 0, h));
  Tensor f = sigmoid(slice_rows(gates, h, 2 * h));
  Tensor g = tanh(slice_rows(gates, 2 * h, 3 * h));
  Tensor o = sigmoid(slice_rows(gates, 3 * h, 4 * h));
  Tensor c = add(mul(f, c_prev), mul(i, g));
  Tensor h_next = mul(o, tanh(c));
  return {h_next, c};
}

EncoderStackParams make_encoder_stack(int in, int hidden, int layers,
                                      std::set<int> subsample_layers, Rng& rng) {
  EncoderStackParams p;
  p.subsample_layers = std::move(subsample_layers);
  for (int l : p.subsample_layers)
    if (l < 0 || l >= layers)
      throw ConfigError("encoder: subsample layer " + std::to_string(l) +
                        " out of range for " + std::to_string(layers) + " layers");
  int d = in;
  for (int l = 0; l < layers; ++l) {
    p.layers.push_back({make_lstm_cell(d, hidden, rng), make_lstm_cell(d, hidden, rng)});
    d = 2 * hidden;
  }
  return p;
}

namespace {

// One direction over the row sequence; reverse=true walks right to left and
// reports states in original time order.
std::vector<Tensor> lstm_sweep(const LSTMCellParams& cell, const Tensor& x, bool reverse) {
  const int s = x.dim(0);
  const int h = cell.hidden;
  // Input-to-gate products for every step at once.
  Tensor gx_all = matmul_nt(x, cell.w_x);  // [S×4h]
  std::vector<Tensor> out(static_cast<std::size_t>(s));
  Tensor hh = Tensor::zeros({h});
  Tensor cc = Tensor::zeros({h});
  for (int step = 0; step < s; ++step) {
    const int t = reverse ? s - 1 - step : step;
    Tensor gx = reshape(slice_rows(gx_all, t, t + 1), {4 * h});
    Tensor gh = reshape(matmul_nt(reshape(hh, {1, h}), cell.w_h), {4 * h});
    Tensor gates = add(add(gx, gh), cell.bias);
    Tensor i = sigmoid(slice_rows(gates, 0, h));
    Tensor f = sigmoid(slice_rows(gates, h, 2 * h));
    Tensor g = tanh(slice_rows(gates, 2 * h, 3 * h));
    Tensor o = sigmoid(slice_rows(gates, 3 * h, 4 * h));
    cc = add(mul(f, cc), mul(i, g));
    hh = mul(o, tanh(cc));
    out[static_cast<std::size_t>(t)] = hh;
  }
  return out;
}

}  // namespace

Tensor bilstm_encode(const EncoderStackParams& p, const Tensor& x) {
  if (x.ndim() != 2) throw ShapeError("bilstm_encode: expected [S×d] input");
  Tensor cur = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    std::vector<Tensor> fwd = lstm_sweep(p.layers[l].fwd, cur, false);
    std::vector<Tensor> bwd = lstm_sweep(p.layers[l].bwd, cur, true);
    std::vector<Tensor> steps(fwd.size());
    for (std::size_t t = 0; t < fwd.size(); ++t) steps[t] = concat({fwd[t], bwd[t]});
    cur = stack_rows(steps);
    if (p.subsample_layers.count(static_cast<int>(l))) {
      std::vector<int> keep;
      for (int t = 0; t < cur.dim(0); t += 2) keep.push_back(t);
      cur = take_rows(cur, keep);
    }
  }
  return cur;
}

int encoded_length(const EncoderStackParams& p, int input_len) {
  int s = input_len;
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    if (p.subsample_layers.count(static_cast<int>(l))) s = (s + 1) / 2;
  return s;
}

void AdamState::init(const std::vector<NamedParam>& params) {
  m.clear();
  v.clear();
  step = 0;
  for (const auto& p : params) {
    m.emplace_back(p.tensor.numel(), 0.0);
    v.emplace_back(p.tensor.numel(), 0.0);
  }
}

void adam_step(AdamState& state, std::vector<NamedParam>& params) {
  if (state.m.size() != params.size()) state.init(params);
  for (const auto& p : params)
    if (!p.tensor.has_grad())
      throw UninitializedGradientError("adam_step: parameter '" + p.name + "' has no gradient");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = params[pi].tensor;
    std::vector<double>& m = state.m[pi];
    std::vector<double>& v = state.v[pi];
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double g = t.grad()[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      t.data()[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double clip_grad_norm(std::vector<NamedParam>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.grad()) g *= s;
    }
  }
  return norm;
}

}  // namespace monoattn
