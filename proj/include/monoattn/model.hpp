#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "monoattn/attention.hpp"
#include "monoattn/data.hpp"
#include "monoattn/layers.hpp"

namespace monoattn {

enum class InputMode { Tokens, Features };
enum class AttentionKind { Global, LocalM, LocalMonoConst, LocalMonoUnconst };

std::string to_string(InputMode m);
std::string to_string(AttentionKind k);
std::string to_string(ScorerKind k);
InputMode parse_input_mode(const std::string& s);
AttentionKind parse_attention_kind(const std::string& s);
ScorerKind parse_scorer_kind(const std::string& s);

struct ModelConfig {
  InputMode input_mode = InputMode::Tokens;
  int src_vocab = 0;    // token mode
  int tgt_vocab = 0;
  int feature_dim = 0;  // feature mode
  int embed_dim = 32;
  int enc_layers = 1;
  int enc_hidden = 32;  // per direction; encoder states are 2× this wide
  std::set<int> subsample_layers;
  int dec_layers = 1;
  int dec_hidden = 64;
  AttentionKind attention = AttentionKind::LocalMonoUnconst;
  ScorerKind scorer = ScorerKind::Mlp;
  double two_sigma = 3.0;
  double c_max = 5.0;
  int k_hidden = 32;  // hidden size of the position head and the mlp scorer
  double local_m_ratio = 1.0;
  std::uint64_t seed = 1;

  int encoder_width() const { return 2 * enc_hidden; }
  void validate() const;  // throws ConfigError
};

struct EncoderOutput {
  Tensor states;  // [S'×M]
  int s_original = 0;
  int length() const { return states.dim(0); }
};

struct DecoderState {
  std::vector<std::pair<Tensor, Tensor>> layers;  // (h, c) per decoder layer
  MonotonicState mono;
  int prev_token = kSosId;
  int step = 0;
};

struct Seq2SeqModel {
  ModelConfig config;
  EmbeddingParams src_embed;  // token mode
  LinearParams feat_proj;     // feature mode
  EncoderStackParams encoder;
  EmbeddingParams tgt_embed;
  std::vector<LSTMCellParams> decoder;
  ScorerParams scorer;
  PositionPredictor predictor;  // local monotonic kinds only
  LinearParams out_proj;        // [V × (dec_hidden + M)]

  static Seq2SeqModel init(const ModelConfig& config);

  // Stable name → tensor view of every trainable parameter, in a fixed
  // order (drives Adam slot alignment and checkpoint layout).
  std::vector<NamedParam> parameters() const;

  EncoderOutput encode(const std::vector<int>& src_ids) const;
  EncoderOutput encode_features(const std::vector<std::vector<double>>& frames) const;
  EncoderOutput encode_item(const EncodedItem& item) const;

  DecoderState initial_state() const;

  // Embed y_prev, advance the decoder LSTM stack, attend per the configured
  // mechanism, and project [h_d; c_t] to target-vocabulary logits.
  std::tuple<Tensor, AttentionOutput, DecoderState> decode_step(const DecoderState& state,
                                                                const EncoderOutput& enc,
                                                                int y_prev) const;

  // Teacher-forced mean cross-entropy over the target (which must end with
  // eos).
  Tensor forward_loss(const EncodedItem& item) const;
  Tensor forward_loss(const std::vector<int>& src_ids, const std::vector<int>& tgt_ids) const;
};

struct EpochStats {
  double mean_loss = 0.0;
  double seconds = 0.0;
};

// One pass over the batches: per batch, zero gradients, average the items'
// losses, backpropagate, clip to clip_norm, and apply Adam.
EpochStats train_epoch(Seq2SeqModel& model, const std::vector<Batch>& batches,
                       AdamState& adam, double clip_norm = 5.0);

}  // namespace monoattn
