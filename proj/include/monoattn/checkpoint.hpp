#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "monoattn/model.hpp"

namespace monoattn {

// Plain-text model snapshot. Doubles are written with 17 significant
// digits, so save → load → save is byte-identical and a loaded model
// reproduces the saved model's arithmetic exactly.
struct Checkpoint {
  long epoch = 0;
  std::array<std::uint64_t, 4> rng_state{};
  ModelConfig config;
  std::vector<std::string> src_tokens;  // non-reserved vocabulary entries
  std::vector<std::string> tgt_tokens;
  std::vector<std::pair<std::string, Tensor>> params;
  std::optional<AdamState> adam;
};

Checkpoint make_checkpoint(const Seq2SeqModel& model, const Vocab& src_vocab,
                           const Vocab& tgt_vocab, long epoch,
                           const std::array<std::uint64_t, 4>& rng_state,
                           const AdamState* adam = nullptr);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the model (and vocabularies) from a loaded checkpoint.
Seq2SeqModel restore_model(const Checkpoint& ckpt, Vocab* src_vocab = nullptr,
                           Vocab* tgt_vocab = nullptr);

}  // namespace monoattn
