#pragma once

#include <set>
#include <utility>
#include <vector>

#include "monoattn/gradcheck.hpp"
#include "monoattn/ops.hpp"
#include "monoattn/rng.hpp"
#include "monoattn/tensor.hpp"

namespace monoattn {

struct LinearParams {
  Tensor weight;  // [out×in]
  Tensor bias;    // [out]
};

// Xavier-uniform: weight ~ U(-r, r) with r = sqrt(6/(in+out)), bias zero.
LinearParams make_linear(int in, int out, Rng& rng);

// x may be a vector [in] or a matrix [rows×in]; the result matches.
Tensor linear(const LinearParams& p, const Tensor& x);

struct EmbeddingParams {
  Tensor table;  // [vocab×dim]; rows 0..3 are pad/unk/sos/eos
};

EmbeddingParams make_embedding(int vocab, int dim, Rng& rng);
Tensor embed(const EmbeddingParams& p, int id);                          // [dim]
Tensor embed_seq(const EmbeddingParams& p, const std::vector<int>& ids); // [S×dim]

struct LSTMCellParams {
  Tensor w_x;   // [4h×in], gate blocks ordered (input, forget, cell, output)
  Tensor w_h;   // [4h×h]
  Tensor bias;  // [4h], forget block initialized to 1
  int hidden = 0;
  int input = 0;
};

LSTMCellParams make_lstm_cell(int in, int hidden, Rng& rng);

std::pair<Tensor, Tensor> lstm_step(const LSTMCellParams& p, const Tensor& x,
                                    const Tensor& h_prev, const Tensor& c_prev);

struct BiLstmLayerParams {
  LSTMCellParams fwd;
  LSTMCellParams bwd;
};

struct EncoderStackParams {
  std::vector<BiLstmLayerParams> layers;
  std::set<int> subsample_layers;  // layers whose output keeps every 2nd step
};

EncoderStackParams make_encoder_stack(int in, int hidden, int layers,
                                      std::set<int> subsample_layers, Rng& rng);

// Per layer: forward and backward passes concatenated per time step; layers
// in subsample_layers keep steps 0, 2, 4, ... (ceil semantics). Output is
// [S'×2h].
Tensor bilstm_encode(const EncoderStackParams& p, const Tensor& x);

// Output length after the subsampling schedule, without running the stack.
int encoded_length(const EncoderStackParams& p, int input_len);

struct AdamState {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> m;  // first moments, aligned with params
  std::vector<std::vector<double>> v;  // second moments

  void init(const std::vector<NamedParam>& params);
};

// Standard Adam update with bias correction. Gradients are left untouched;
// the caller zeroes them between steps.
void adam_step(AdamState& state, std::vector<NamedParam>& params);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
double clip_grad_norm(std::vector<NamedParam>& params, double max_norm);

}  // namespace monoattn
