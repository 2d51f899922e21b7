#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "monoattn/decoding.hpp"

namespace monoattn {

// Every knob of every subcommand, with its default. Flags mirror these
// fields one to one; a config file may set them too, but flags win.
struct RunConfig {
  // Corpus selection: file paths when given, otherwise a synthetic task.
  std::string task = "copy";  // copy|expansion|toy-g2p|expansion-feat
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  int train_n = 2000;
  int dev_n = 200;
  int alphabet = 20;
  int min_len = 5;
  int gen_max_len = 20;
  double ratio_lo = 2.0;
  double ratio_hi = 3.0;
  int min_count = 1;
  int feature_dim = 8;      // expansion-feat
  double feature_noise = 0.1;

  // Model.
  std::string attention = "local-mono-unconst";
  std::string scorer = "mlp";
  double two_sigma = 3.0;
  double c_max = 5.0;
  int embed_dim = 32;
  int enc_layers = 1;
  int enc_hidden = 32;
  std::string subsample;  // comma-separated encoder layer indices
  int dec_layers = 1;
  int dec_hidden = 64;
  int k_hidden = 32;
  double local_m_ratio = 1.0;

  // Training.
  double lr = 5e-4;
  int epochs = 15;
  int batch_size = 16;
  double clip = 5.0;
  std::uint64_t seed = 1;

  // Decoding.
  int beam = 1;
  double alpha = 1.0;
  int max_len = 200;

  // Command I/O.
  std::string out_dir = ".";
  std::string checkpoint;
  std::string input;     // decode: space-separated source tokens
  std::string features;  // decode: feature file path
  int align_n = 0;       // align: item limit, 0 = all
  std::string lengths = "10,100,1000";  // bench: encoder lengths
  int t_steps = 10;                     // bench: decode steps
};

ModelConfig model_config_from(const RunConfig& cfg, int src_vocab, int tgt_vocab);

// Per-epoch log line: "epoch N loss L dev_acc A seconds S" (A is "na"
// without a dev set). Writes epoch<N>.ckpt per epoch, final.ckpt (with
// optimizer state) and train.log under out_dir.
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_decode(const RunConfig& cfg, std::ostream& out);
int cmd_align(const RunConfig& cfg, std::ostream& out);

struct BenchRow {
  int s_len = 0;
  std::uint64_t global_calls = 0;
  std::uint64_t local_calls = 0;
  double global_seconds = 0.0;
  double local_seconds = 0.0;
};

// Fixed-T decoding over random inputs per encoder length; counts scorer
// invocations for the global and local monotonic mechanisms.
std::vector<BenchRow> run_bench(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg, std::ostream& out);

// Feature-mode evaluation twin of evaluate().
EvalReport evaluate_features(const Seq2SeqModel& model, const FeatureCorpus& corpus,
                             const Vocab& tgt_vocab, int beam, double alpha, int max_len);

int run_cli(int argc, char** argv);

}  // namespace monoattn
