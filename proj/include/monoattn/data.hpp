#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "monoattn/error.hpp"
#include "monoattn/rng.hpp"

namespace monoattn {

// Reserved token ids, fixed across every vocabulary.
constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kSosId = 2;
constexpr int kEosId = 3;

class Vocab {
 public:
  Vocab();  // reserved entries only

  // Adds a token if absent; returns its id either way.
  int add(const std::string& token);

  int encode(const std::string& token) const;  // unk id when absent
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  const std::string& decode(int id) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

struct CorpusItem {
  std::vector<std::string> source;
  std::vector<std::vector<std::string>> refs;  // ≥1 reference targets
  // Generator construction record: for each token of refs[0], the index of
  // the source token that produced it (empty for loaded corpora).
  std::vector<int> alignment;
};

using ParallelCorpus = std::vector<CorpusItem>;

enum class TaskKind { Copy, Expansion, ToyG2p };

struct SyntheticTaskSpec {
  TaskKind kind = TaskKind::Copy;
  int alphabet = 20;
  int min_len = 5;
  int max_len = 20;
  double ratio_lo = 2.0;  // expansion only: integer repeats drawn from
  double ratio_hi = 3.0;  // [ceil(ratio_lo), floor(ratio_hi)], fixed per symbol
  std::uint64_t seed = 1;
};

// Count-below-min_count tokens are left out of the vocabulary (they encode
// to unk). Insertion order: count descending, then lexicographic.
Vocab build_vocab(const std::vector<std::vector<std::string>>& seqs, int min_count);
std::vector<std::vector<std::string>> corpus_sources(const ParallelCorpus& corpus);
std::vector<std::vector<std::string>> corpus_targets(const ParallelCorpus& corpus);

ParallelCorpus gen_task(const SyntheticTaskSpec& spec, int n);

// "source<TAB>target" per line, tokens space-separated; repeated sources
// merge into one multi-reference entry, first occurrence order preserved.
ParallelCorpus load_tsv(const std::string& path);
void save_tsv(const ParallelCorpus& corpus, const std::string& path);

struct G2pRule {
  std::string graphemes;  // 1–2 characters
  std::string phoneme;
};

// Loads "graphemes<TAB>phoneme" lines; default table ships in data/.
std::vector<G2pRule> load_g2p_rules(const std::string& path);
std::string default_g2p_rules_path();

// Greedy longest-match left to right. align (optional) receives the start
// character index of each emitted phoneme.
std::vector<std::string> apply_g2p(const std::string& word, const std::vector<G2pRule>& rules,
                                   std::vector<int>* align = nullptr);

struct EncodedItem {
  std::vector<int> src;                      // token mode
  std::vector<std::vector<double>> frames;   // feature mode
  std::vector<int> tgt;                      // always ends with eos
};

struct Batch {
  std::vector<EncodedItem> items;
};

// One epoch's batches: every (source, reference) pair becomes a training
// item, shuffled by a seed mixed with the epoch index.
std::vector<Batch> make_batches(const ParallelCorpus& corpus, const Vocab& src_vocab,
                                const Vocab& tgt_vocab, int batch_size, std::uint64_t seed,
                                std::uint64_t epoch);

struct FeatureItem {
  std::vector<std::vector<double>> frames;  // S × D
  std::vector<std::vector<std::string>> refs;
};

using FeatureCorpus = std::vector<FeatureItem>;

// Renders each source symbol as a fixed random vector plus per-frame
// uniform noise in [-noise, noise], giving real-valued inputs with the same
// monotonic alignment structure as the token corpus.
FeatureCorpus render_features(const ParallelCorpus& corpus, int dim, double noise,
                              std::uint64_t seed);

std::vector<Batch> make_feature_batches(const FeatureCorpus& corpus, const Vocab& tgt_vocab,
                                        int batch_size, std::uint64_t seed,
                                        std::uint64_t epoch);

// Feature file: header "S D", then S lines of D space-separated decimals.
void save_features(const std::vector<std::vector<double>>& frames, const std::string& path);
std::vector<std::vector<double>> load_features(const std::string& path);

}  // namespace monoattn
