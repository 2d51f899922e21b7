#pragma once

#include <string>
#include <vector>

#include "monoattn/model.hpp"

namespace monoattn {

struct DecodeResult {
  std::vector<int> tokens;  // eos stripped
  double log_prob = 0.0;    // summed token log-probabilities (incl. eos)
  bool truncated = false;   // hit max_len before eos
};

// Argmax per step until eos or max_len. Ties break toward the lowest token
// id, so the result is fully deterministic.
DecodeResult greedy_decode(const Seq2SeqModel& model, const EncoderOutput& enc, int max_len);
DecodeResult greedy_decode(const Seq2SeqModel& model, const std::vector<int>& src_ids,
                           int max_len);

struct BeamHypothesis {
  std::vector<int> tokens;   // eos stripped
  double log_prob = 0.0;
  double norm_score = 0.0;   // log_prob / max(1, |tokens|)^alpha
  bool truncated = false;
};

// Standard beam search: all active hypotheses expand one step, candidates
// prune globally by accumulated log-probability, finished hypotheses freeze
// and compete through the normalized score. beam=1 reproduces greedy_decode
// exactly. Returns up to `beam` results, best normalized score first.
std::vector<BeamHypothesis> beam_decode(const Seq2SeqModel& model, const EncoderOutput& enc,
                                        int beam, double alpha, int max_len);
std::vector<BeamHypothesis> beam_decode(const Seq2SeqModel& model,
                                        const std::vector<int>& src_ids, int beam,
                                        double alpha, int max_len);

struct EditCounts {
  int distance = 0;
  int subs = 0;
  int ins = 0;
  int dels = 0;
};

// Levenshtein distance with unit costs; the returned counts decompose it.
EditCounts edit_distance(const std::vector<int>& hyp, const std::vector<int>& ref);
EditCounts edit_distance(const std::vector<std::string>& hyp,
                         const std::vector<std::string>& ref);

struct MultiRefScore {
  EditCounts counts;         // against the chosen reference
  std::size_t ref_index = 0;
  int ref_len = 0;
  bool exact_match = false;
};

// Chooses the reference minimizing distance/len(ref); ties prefer the
// shorter reference, then the earlier one.
MultiRefScore score_multi_ref(const std::vector<std::string>& hyp,
                              const std::vector<std::vector<std::string>>& refs);

struct ItemResult {
  std::vector<std::string> hyp;
  EditCounts counts;
  std::size_t ref_index = 0;
  int ref_len = 0;
  bool exact_match = false;
};

struct EvalReport {
  std::vector<ItemResult> items;
  long total_distance = 0;
  long total_ref_len = 0;
  long exact_matches = 0;
  double error_rate() const {  // PER/WER depending on token unit
    return total_ref_len ? static_cast<double>(total_distance) /
                               static_cast<double>(total_ref_len)
                         : 0.0;
  }
  double sequence_accuracy() const {
    return items.empty() ? 0.0
                         : static_cast<double>(exact_matches) /
                               static_cast<double>(items.size());
  }
};

// Decodes every corpus item (beam=1 → greedy) and aggregates with the
// multi-reference protocol.
EvalReport evaluate(const Seq2SeqModel& model, const ParallelCorpus& corpus,
                    const Vocab& src_vocab, const Vocab& tgt_vocab, int beam, double alpha,
                    int max_len);

}  // namespace monoattn
