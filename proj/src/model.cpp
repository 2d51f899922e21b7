#include "monoattn/model.hpp"

#include <chrono>
#include <cmath>

namespace monoattn {

std::string to_string(InputMode m) {
  return m == InputMode::Tokens ? "tokens" : "features";
}

std::string to_string(AttentionKind k) {
  switch (k) {
    case AttentionKind::Global: return "global";
    case AttentionKind::LocalM: return "local-m";
    case AttentionKind::LocalMonoConst: return "local-mono-const";
    case AttentionKind::LocalMonoUnconst: return "local-mono-unconst";
  }
  return "?";
}

std::string to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::Dot: return "dot";
    case ScorerKind::Bilinear: return "bilinear";
    case ScorerKind::Mlp: return "mlp";
    case ScorerKind::None: return "none";
  }
  return "?";
}

InputMode parse_input_mode(const std::string& s) {
  if (s == "tokens") return InputMode::Tokens;
  if (s == "features") return InputMode::Features;
  throw ConfigError("unknown input mode '" + s + "' (tokens|features)");
}

AttentionKind parse_attention_kind(const std::string& s) {
  if (s == "global") return AttentionKind::Global;
  if (s == "local-m") return AttentionKind::LocalM;
  if (s == "local-mono-const") return AttentionKind::LocalMonoConst;
  if (s == "local-mono-unconst") return AttentionKind::LocalMonoUnconst;
  throw ConfigError("unknown attention kind '" + s +
                    "' (global|local-m|local-mono-const|local-mono-unconst)");
}

ScorerKind parse_scorer_kind(const std::string& s) {
  if (s == "dot") return ScorerKind::Dot;
  if (s == "bilinear") return ScorerKind::Bilinear;
  if (s == "mlp") return ScorerKind::Mlp;
  if (s == "none") return ScorerKind::None;
  throw ConfigError("unknown scorer kind '" + s + "' (dot|bilinear|mlp|none)");
}

void ModelConfig::validate() const {
  if (input_mode == InputMode::Tokens && src_vocab < 4)
    throw ConfigError("token mode needs a source vocabulary (>= 4 entries)");
  if (input_mode == InputMode::Features && feature_dim < 1)
    throw ConfigError("feature mode needs feature_dim >= 1");
  if (tgt_vocab < 4) throw ConfigError("target vocabulary must have >= 4 entries");
  if (embed_dim < 1 || enc_hidden < 1 || dec_hidden < 1 || k_hidden < 1)
    throw ConfigError("all layer widths must be >= 1");
  if (enc_layers < 1 || dec_layers < 1) throw ConfigError("layer counts must be >= 1");
  for (int l : subsample_layers)
    if (l < 0 || l >= enc_layers)
      throw ConfigError("subsample layer " + std::to_string(l) + " out of range");
  if (two_sigma <= 0.0) throw ConfigError("two_sigma must be positive");
  if (c_max <= 0.0) throw ConfigError("c_max must be positive");
  if (local_m_ratio <= 0.0) throw ConfigError("local_m_ratio must be positive");
  const bool needs_scorer =
      attention == AttentionKind::Global || attention == AttentionKind::LocalM;
  if (needs_scorer && scorer == ScorerKind::None)
    throw ConfigError(to_string(attention) + " attention requires a scorer");
  if (scorer == ScorerKind::Dot && encoder_width() != dec_hidden)
    throw ConfigError("dot scorer needs encoder width == decoder hidden (" +
                      std::to_string(encoder_width()) + " vs " + std::to_string(dec_hidden) +
                      ")");
}

Seq2SeqModel Seq2SeqModel::init(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Seq2SeqModel m;
  m.config = config;
  if (config.input_mode == InputMode::Tokens)
    m.src_embed = make_embedding(config.src_vocab, config.embed_dim, rng);
  else
    m.feat_proj = make_linear(config.feature_dim, config.embed_dim, rng);
  m.encoder = make_encoder_stack(config.embed_dim, config.enc_hidden, config.enc_layers,
                                 config.subsample_layers, rng);
  m.tgt_embed = make_embedding(config.tgt_vocab, config.embed_dim, rng);
  for (int l = 0; l < config.dec_layers; ++l)
    m.decoder.push_back(
        make_lstm_cell(l == 0 ? config.embed_dim : config.dec_hidden, config.dec_hidden, rng));
  m.scorer = make_scorer(config.scorer, config.encoder_width(), config.dec_hidden,
                         config.k_hidden, rng);
  if (config.attention == AttentionKind::LocalMonoConst ||
      config.attention == AttentionKind::LocalMonoUnconst) {
    const PositionMode mode = config.attention == AttentionKind::LocalMonoConst
                                  ? PositionMode::Constrained
                                  : PositionMode::Unconstrained;
    m.predictor = make_position_predictor(mode, config.dec_hidden, config.k_hidden,
                                          config.c_max, config.two_sigma, rng);
  }
  m.out_proj = make_linear(config.dec_hidden + config.encoder_width(), config.tgt_vocab, rng);
  return m;
}

std::vector<NamedParam> Seq2SeqModel::parameters() const {
  std::vector<NamedParam> out;
  auto push = [&out](const std::string& name, const Tensor& t) {
    if (t.defined()) out.push_back({name, t});
  };
  auto push_cell = [&push](const std::string& prefix, const LSTMCellParams& c) {
    push(prefix + ".w_x", c.w_x);
    push(prefix + ".w_h", c.w_h);
    push(prefix + ".bias", c.bias);
  };
  if (config.input_mode == InputMode::Tokens) {
    push("src_embed.table", src_embed.table);
  } else {
    push("feat_proj.weight", feat_proj.weight);
    push("feat_proj.bias", feat_proj.bias);
  }
  for (std::size_t l = 0; l < encoder.layers.size(); ++l) {
    push_cell("enc.l" + std::to_string(l) + ".fwd", encoder.layers[l].fwd);
    push_cell("enc.l" + std::to_string(l) + ".bwd", encoder.layers[l].bwd);
  }
  push("tgt_embed.table", tgt_embed.table);
  for (std::size_t l = 0; l < decoder.size(); ++l)
    push_cell("dec.l" + std::to_string(l), decoder[l]);
  push("scorer.w_s", scorer.w_s);
  push("scorer.v_s", scorer.v_s);
  if (config.attention == AttentionKind::LocalMonoConst ||
      config.attention == AttentionKind::LocalMonoUnconst) {
    push("pos.w_p", predictor.w_p);
    push("pos.v_p", predictor.v_p);
    push("pos.v_lambda", predictor.v_lambda);
  }
  push("out.weight", out_proj.weight);
  push("out.bias", out_proj.bias);
  return out;
}

EncoderOutput Seq2SeqModel::encode(const std::vector<int>& src_ids) const {
  if (config.input_mode != InputMode::Tokens)
    throw ConfigError("encode: model is configured for feature input");
  if (src_ids.empty()) throw EmptySequenceError("encode: empty source");
  EncoderOutput out;
  out.s_original = static_cast<int>(src_ids.size());
  out.states = bilstm_encode(encoder, embed_seq(src_embed, src_ids));
  return out;
}

EncoderOutput Seq2SeqModel::encode_features(
    const std::vector<std::vector<double>>& frames) const {
  if (config.input_mode != InputMode::Features)
    throw ConfigError("encode_features: model is configured for token input");
  if (frames.empty()) throw EmptySequenceError("encode_features: empty input");
  const int s = static_cast<int>(frames.size());
  const int d = static_cast<int>(frames[0].size());
  if (d != config.feature_dim)
    throw ShapeError("encode_features: frame width " + std::to_string(d) +
                     " does not match feature_dim " + std::to_string(config.feature_dim));
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(s) * d);
  for (const auto& frame : frames) {
    if (static_cast<int>(frame.size()) != d)
      throw ShapeError("encode_features: ragged frame widths");
    flat.insert(flat.end(), frame.begin(), frame.end());
  }
  Tensor x = Tensor::from({s, d}, std::move(flat));
  EncoderOutput out;
  out.s_original = s;
  out.states = bilstm_encode(encoder, tanh(linear(feat_proj, x)));
  return out;
}

EncoderOutput Seq2SeqModel::encode_item(const EncodedItem& item) const {
  return config.input_mode == InputMode::Tokens ? encode(item.src)
                                                : encode_features(item.frames);
}

DecoderState Seq2SeqModel::initial_state() const {
  DecoderState s;
  for (int l = 0; l < config.dec_layers; ++l)
    s.layers.emplace_back(Tensor::zeros({config.dec_hidden}),
                          Tensor::zeros({config.dec_hidden}));
  return s;
}

std::tuple<Tensor, AttentionOutput, DecoderState> Seq2SeqModel::decode_step(
    const DecoderState& state, const EncoderOutput& enc, int y_prev) const {
  if (static_cast<int>(state.layers.size()) != config.dec_layers)
    throw ShapeError("decode_step: state has " + std::to_string(state.layers.size()) +
                     " layers, config has " + std::to_string(config.dec_layers));
  DecoderState next = state;
  Tensor x = embed(tgt_embed, y_prev);
  for (std::size_t l = 0; l < decoder.size(); ++l) {
    auto [h, c] = lstm_step(decoder[l], x, state.layers[l].first, state.layers[l].second);
    next.layers[l] = {h, c};
    x = h;
  }
  const Tensor h_d = x;

  AttentionOutput att;
  const int s_len = enc.length();
  switch (config.attention) {
    case AttentionKind::Global: {
      SoftmaxAttention g = global_attend(scorer, enc.states, h_d);
      att.context = g.context;
      att.lambda = 1.0;
      att.window_lo = g.window_lo;
      att.window_hi = g.window_hi;
      att.likelihood.assign(g.weights.begin() + g.window_lo, g.weights.begin() + g.window_hi);
      att.prior.assign(static_cast<std::size_t>(g.window_hi - g.window_lo), 1.0);
      att.posterior = att.likelihood;
      break;
    }
    case AttentionKind::LocalM: {
      const int center = static_cast<int>(
          std::floor(static_cast<double>(state.step) * config.local_m_ratio));
      const int d = static_cast<int>(std::lround(config.two_sigma));
      SoftmaxAttention g = local_m_attend(scorer, enc.states, h_d, center, d);
      att.context = g.context;
      att.p = static_cast<double>(std::min(center, s_len - 1));
      att.lambda = 1.0;
      att.window_lo = g.window_lo;
      att.window_hi = g.window_hi;
      att.likelihood.assign(g.weights.begin() + g.window_lo, g.weights.begin() + g.window_hi);
      att.prior.assign(static_cast<std::size_t>(g.window_hi - g.window_lo), 1.0);
      att.posterior = att.likelihood;
      break;
    }
    case AttentionKind::LocalMonoConst:
    case AttentionKind::LocalMonoUnconst: {
      auto [out, mono] = attend_local_monotonic(state.mono, predictor, scorer, enc.states, h_d);
      att = std::move(out);
      next.mono = mono;
      break;
    }
  }

  Tensor logits = linear(out_proj, concat({h_d, att.context}));
  next.prev_token = y_prev;
  next.step = state.step + 1;
  return {logits, std::move(att), std::move(next)};
}

Tensor Seq2SeqModel::forward_loss(const EncodedItem& item) const {
  if (item.tgt.empty()) throw EmptySequenceError("forward_loss: empty target");
  if (item.tgt.back() != kEosId)
    throw DomainError("forward_loss: target must end with eos");
  const EncoderOutput enc = encode_item(item);
  DecoderState state = initial_state();
  std::vector<Tensor> losses;
  losses.reserve(item.tgt.size());
  int y_prev = kSosId;
  for (int y : item.tgt) {
    auto [logits, att, next] = decode_step(state, enc, y_prev);
    losses.push_back(cross_entropy(logits, y));
    state = std::move(next);
    y_prev = y;
  }
  return mean(concat(losses));
}

Tensor Seq2SeqModel::forward_loss(const std::vector<int>& src_ids,
                                  const std::vector<int>& tgt_ids) const {
  return forward_loss(EncodedItem{src_ids, {}, tgt_ids});
}

EpochStats train_epoch(Seq2SeqModel& model, const std::vector<Batch>& batches,
                       AdamState& adam, double clip_norm) {
  if (batches.empty()) throw EmptyCorpusError("train_epoch: no batches");
  const auto start = std::chrono::steady_clock::now();
  std::vector<NamedParam> params = model.parameters();
  double loss_sum = 0.0;
  std::size_t item_count = 0;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    const Batch& batch = batches[bi];
    if (batch.items.empty()) continue;
    for (auto& p : params) p.tensor.zero_grad();
    GraphTape tape;
    std::vector<Tensor> losses;
    losses.reserve(batch.items.size());
    for (const auto& item : batch.items) losses.push_back(model.forward_loss(item));
    Tensor batch_loss = mean(concat(losses));
    const double loss = batch_loss.value();
    if (!std::isfinite(loss))
      throw DivergedTrainingError("batch " + std::to_string(bi) + ": loss " +
                                  std::to_string(loss));
    tape.backward(batch_loss);
    clip_grad_norm(params, clip_norm);
    adam_step(adam, params);
    loss_sum += loss * static_cast<double>(batch.items.size());
    item_count += batch.items.size();
  }
  EpochStats stats;
  stats.mean_loss = item_count ? loss_sum / static_cast<double>(item_count) : 0.0;
  stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

}  // namespace monoattn
