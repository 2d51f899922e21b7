#include "monoattn/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "monoattn/checkpoint.hpp"

namespace monoattn {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::set<int> parse_layer_set(const std::string& s) {
  std::set<int> out;
  if (s.empty()) return out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      out.insert(std::stoi(part));
    } catch (const std::exception&) {
      throw ConfigError("bad subsample layer list '" + s + "'");
    }
  }
  return out;
}

std::vector<int> parse_length_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ConfigError("bad length list '" + s + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty length list");
  return out;
}

bool is_feature_task(const std::string& task) { return task == "expansion-feat"; }

TaskKind task_kind_from(const std::string& task) {
  if (task == "copy") return TaskKind::Copy;
  if (task == "expansion" || task == "expansion-feat") return TaskKind::Expansion;
  if (task == "toy-g2p") return TaskKind::ToyG2p;
  throw ConfigError("unknown task '" + task + "' (copy|expansion|toy-g2p|expansion-feat)");
}

SyntheticTaskSpec spec_from(const RunConfig& cfg, std::uint64_t seed) {
  SyntheticTaskSpec spec;
  spec.kind = task_kind_from(cfg.task);
  spec.alphabet = cfg.alphabet;
  spec.min_len = cfg.min_len;
  spec.max_len = cfg.gen_max_len;
  spec.ratio_lo = cfg.ratio_lo;
  spec.ratio_hi = cfg.ratio_hi;
  spec.seed = seed;
  return spec;
}

// Synthetic split seeds: 1 = train, 2 = dev, 3 = test.
ParallelCorpus synthetic_split(const RunConfig& cfg, int split, int n) {
  return gen_task(spec_from(cfg, Rng::mix(cfg.seed, static_cast<std::uint64_t>(split))), n);
}

ParallelCorpus eval_corpus(const RunConfig& cfg) {
  if (!cfg.test_path.empty()) return load_tsv(cfg.test_path);
  return synthetic_split(cfg, 2, cfg.dev_n);  // dev split stands in
}

// Every source token unknown means the corpus cannot be from the
// checkpoint's world; partial unks are legitimate (rare tokens).
void check_vocab_compat(const ParallelCorpus& corpus, const Vocab& src_vocab) {
  bool any_known = false;
  for (const auto& item : corpus)
    for (const auto& tok : item.source)
      if (src_vocab.contains(tok)) {
        any_known = true;
        break;
      }
  if (!any_known)
    throw VocabMismatchError(
        "no source token of the corpus appears in the checkpoint vocabulary");
}

struct LoadedModel {
  Seq2SeqModel model;
  Vocab src_vocab;
  Vocab tgt_vocab;
};

LoadedModel load_model(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("missing --checkpoint");
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  LoadedModel lm;
  lm.model = restore_model(ckpt, &lm.src_vocab, &lm.tgt_vocab);
  return lm;
}

}  // namespace

ModelConfig model_config_from(const RunConfig& cfg, int src_vocab, int tgt_vocab) {
  ModelConfig mc;
  mc.input_mode = is_feature_task(cfg.task) && cfg.train_path.empty() ? InputMode::Features
                                                                      : InputMode::Tokens;
  mc.src_vocab = src_vocab;
  mc.tgt_vocab = tgt_vocab;
  mc.feature_dim = cfg.feature_dim;
  mc.embed_dim = cfg.embed_dim;
  mc.enc_layers = cfg.enc_layers;
  mc.enc_hidden = cfg.enc_hidden;
  mc.subsample_layers = parse_layer_set(cfg.subsample);
  mc.dec_layers = cfg.dec_layers;
  mc.dec_hidden = cfg.dec_hidden;
  mc.attention = parse_attention_kind(cfg.attention);
  mc.scorer = parse_scorer_kind(cfg.scorer);
  mc.two_sigma = cfg.two_sigma;
  mc.c_max = cfg.c_max;
  mc.k_hidden = cfg.k_hidden;
  mc.local_m_ratio = cfg.local_m_ratio;
  mc.seed = cfg.seed;
  return mc;
}

EvalReport evaluate_features(const Seq2SeqModel& model, const FeatureCorpus& corpus,
                             const Vocab& tgt_vocab, int beam, double alpha, int max_len) {
  if (corpus.empty()) throw EmptyCorpusError("evaluate_features: empty corpus");
  EvalReport report;
  for (const auto& item : corpus) {
    const EncoderOutput enc = model.encode_features(item.frames);
    std::vector<int> hyp_ids;
    if (beam > 1) {
      const auto hyps = beam_decode(model, enc, beam, alpha, max_len);
      if (!hyps.empty()) hyp_ids = hyps[0].tokens;
    } else {
      hyp_ids = greedy_decode(model, enc, max_len).tokens;
    }
    ItemResult res;
    res.hyp = tgt_vocab.decode(hyp_ids);
    const MultiRefScore score = score_multi_ref(res.hyp, item.refs);
    res.counts = score.counts;
    res.ref_index = score.ref_index;
    res.ref_len = score.ref_len;
    res.exact_match = score.exact_match;
    report.total_distance += score.counts.distance;
    report.total_ref_len += score.ref_len;
    if (score.exact_match) ++report.exact_matches;
    report.items.push_back(std::move(res));
  }
  return report;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const bool feature_mode = is_feature_task(cfg.task) && cfg.train_path.empty();

  ParallelCorpus train, dev;
  if (!cfg.train_path.empty()) {
    train = load_tsv(cfg.train_path);
    if (!cfg.dev_path.empty()) dev = load_tsv(cfg.dev_path);
  } else {
    train = synthetic_split(cfg, 1, cfg.train_n);
    if (cfg.dev_n > 0) dev = synthetic_split(cfg, 2, cfg.dev_n);
  }

  const Vocab src_vocab = build_vocab(corpus_sources(train), cfg.min_count);
  const Vocab tgt_vocab = build_vocab(corpus_targets(train), cfg.min_count);

  FeatureCorpus ftrain, fdev;
  if (feature_mode) {
    ftrain = render_features(train, cfg.feature_dim, cfg.feature_noise,
                             Rng::mix(cfg.seed, 11));
    if (!dev.empty())
      fdev = render_features(dev, cfg.feature_dim, cfg.feature_noise, Rng::mix(cfg.seed, 12));
  }

  ModelConfig mc = model_config_from(cfg, src_vocab.size(), tgt_vocab.size());
  Seq2SeqModel model = Seq2SeqModel::init(mc);
  AdamState adam;
  adam.lr = cfg.lr;

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream log(cfg.out_dir + "/train.log");
  if (!log) throw IoError("cannot write " + cfg.out_dir + "/train.log");
  const Rng run_rng(cfg.seed);

  auto save_epoch = [&](long epoch, bool with_adam, const std::string& name) {
    const Checkpoint ckpt = make_checkpoint(model, src_vocab, tgt_vocab, epoch,
                                            run_rng.state(), with_adam ? &adam : nullptr);
    save_checkpoint(ckpt, cfg.out_dir + "/" + name);
  };

  auto dev_accuracy = [&]() -> std::string {
    if (dev.empty()) return "na";
    const EvalReport report =
        feature_mode
            ? evaluate_features(model, fdev, tgt_vocab, 1, cfg.alpha, cfg.max_len)
            : evaluate(model, dev, src_vocab, tgt_vocab, 1, cfg.alpha, cfg.max_len);
    return fmt("%.4f", report.sequence_accuracy());
  };

  if (cfg.epochs == 0) save_epoch(0, false, "final.ckpt");
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<Batch> batches =
        feature_mode ? make_feature_batches(ftrain, tgt_vocab, cfg.batch_size, cfg.seed,
                                            static_cast<std::uint64_t>(epoch))
                     : make_batches(train, src_vocab, tgt_vocab, cfg.batch_size, cfg.seed,
                                    static_cast<std::uint64_t>(epoch));
    const EpochStats stats = train_epoch(model, batches, adam, cfg.clip);
    const std::string line = "epoch " + std::to_string(epoch) + " loss " +
                             fmt("%.6f", stats.mean_loss) + " dev_acc " + dev_accuracy() +
                             " seconds " + fmt("%.2f", stats.seconds);
    out << line << '\n';
    log << line << '\n';
    save_epoch(epoch, false, "epoch" + std::to_string(epoch) + ".ckpt");
    if (epoch == cfg.epochs) save_epoch(epoch, true, "final.ckpt");
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  LoadedModel lm = load_model(cfg);
  EvalReport report;
  if (lm.model.config.input_mode == InputMode::Features) {
    if (!cfg.test_path.empty())
      throw ConfigError("feature-mode checkpoints evaluate on synthetic splits only");
    const ParallelCorpus corpus = synthetic_split(cfg, 2, cfg.dev_n);
    const FeatureCorpus fc = render_features(corpus, lm.model.config.feature_dim,
                                             cfg.feature_noise, Rng::mix(cfg.seed, 12));
    report = evaluate_features(lm.model, fc, lm.tgt_vocab, cfg.beam, cfg.alpha, cfg.max_len);
  } else {
    const ParallelCorpus corpus = eval_corpus(cfg);
    check_vocab_compat(corpus, lm.src_vocab);
    report = evaluate(lm.model, corpus, lm.src_vocab, lm.tgt_vocab, cfg.beam, cfg.alpha,
                      cfg.max_len);
  }

  out << "item\tdist\tsub\tins\tdel\tref_len\texact\thyp\n";
  for (std::size_t i = 0; i < report.items.size(); ++i) {
    const ItemResult& r = report.items[i];
    out << i << '\t' << r.counts.distance << '\t' << r.counts.subs << '\t' << r.counts.ins
        << '\t' << r.counts.dels << '\t' << r.ref_len << '\t' << (r.exact_match ? 1 : 0)
        << '\t';
    for (std::size_t t = 0; t < r.hyp.size(); ++t) out << (t ? " " : "") << r.hyp[t];
    out << '\n';
  }
  out << "items=" << report.items.size() << " edits=" << report.total_distance
      << " ref_len=" << report.total_ref_len << " per=" << fmt("%.6f", report.error_rate())
      << " seq_acc=" << fmt("%.6f", report.sequence_accuracy()) << '\n';
  return 0;
}

int cmd_decode(const RunConfig& cfg, std::ostream& out) {
  LoadedModel lm = load_model(cfg);
  EncoderOutput enc;
  if (!cfg.features.empty()) {
    enc = lm.model.encode_features(load_features(cfg.features));
  } else if (!cfg.input.empty()) {
    std::istringstream in(cfg.input);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    enc = lm.model.encode(lm.src_vocab.encode(tokens));
  } else {
    throw ConfigError("decode needs --input tokens or --features file");
  }
  const auto hyps = beam_decode(lm.model, enc, cfg.beam, cfg.alpha, cfg.max_len);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    out << i << '\t' << fmt("%.6f", hyps[i].norm_score) << '\t'
        << fmt("%.6f", hyps[i].log_prob) << '\t';
    const auto tokens = lm.tgt_vocab.decode(hyps[i].tokens);
    for (std::size_t t = 0; t < tokens.size(); ++t) out << (t ? " " : "") << tokens[t];
    if (hyps[i].truncated) out << "\t[truncated]";
    out << '\n';
  }
  return 0;
}

int cmd_align(const RunConfig& cfg, std::ostream& out) {
  LoadedModel lm = load_model(cfg);
  if (lm.model.config.input_mode == InputMode::Features)
    throw ConfigError("align expects a token-mode checkpoint");
  const ParallelCorpus corpus = eval_corpus(cfg);
  check_vocab_compat(corpus, lm.src_vocab);
  std::filesystem::create_directories(cfg.out_dir);

  const std::size_t limit = cfg.align_n > 0
                                ? std::min<std::size_t>(corpus.size(),
                                                        static_cast<std::size_t>(cfg.align_n))
                                : corpus.size();
  for (std::size_t k = 0; k < limit; ++k) {
    const EncoderOutput enc = lm.model.encode(lm.src_vocab.encode(corpus[k].source));
    const int s_len = enc.length();

    std::vector<AttentionOutput> steps;
    DecoderState state = lm.model.initial_state();
    int y_prev = kSosId;
    for (int t = 0; t < cfg.max_len; ++t) {
      auto [logits, att, next] = lm.model.decode_step(state, enc, y_prev);
      steps.push_back(att);
      const std::vector<double>& x = logits.data();
      int tok = 0;
      for (int i = 1; i < static_cast<int>(x.size()); ++i)
        if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(tok)]) tok = i;
      if (tok == kEosId) break;
      state = std::move(next);
      y_prev = tok;
    }

    const std::string path = cfg.out_dir + "/item" + std::to_string(k) + ".csv";
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "t,p,delta_p,lambda,window_lo,window_hi\n";
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const AttentionOutput& a = steps[t];
      f << t << ',' << fmt("%.17g", a.p) << ',' << fmt("%.17g", a.delta_p) << ','
        << fmt("%.17g", a.lambda) << ',' << a.window_lo << ',' << a.window_hi << '\n';
    }
    f << '\n';
    for (const AttentionOutput& a : steps) {
      for (int s = 0; s < s_len; ++s) {
        const bool inside = s >= a.window_lo && s < a.window_hi;
        const double v =
            inside ? a.posterior[static_cast<std::size_t>(s - a.window_lo)] : 0.0;
        f << (s ? "," : "") << fmt("%.17g", v);
      }
      f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
  }
  out << "wrote " << limit << " alignment files to " << cfg.out_dir << '\n';
  return 0;
}

std::vector<BenchRow> run_bench(const RunConfig& cfg) {
  const std::vector<int> lengths = parse_length_list(cfg.lengths);
  for (const int s_len : lengths)
    if (s_len < 1) throw ConfigError("bench lengths must be >= 1");
  for (std::size_t i = 1; i < lengths.size(); ++i)
    if (lengths[i] <= lengths[i - 1])
      throw ConfigError("bench lengths must be ascending");
  const int t_steps = cfg.t_steps;
  if (t_steps < 1) throw ConfigError("bench needs t_steps >= 1");

  std::vector<BenchRow> rows;
  for (const int s_len : lengths) {
    // Same seed for every S: identical parameters, so the local window
    // trajectory matches across lengths except for boundary clipping.
    RunConfig base = cfg;
    base.task = "copy";
    base.alphabet = 20;

    Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(s_len)));
    std::vector<int> src(static_cast<std::size_t>(s_len));
    for (auto& id : src) id = 4 + rng.uniform_int(0, 19);

    Vocab vocab;
    for (int i = 0; i < 20; ++i) vocab.add(std::string(1, static_cast<char>('a' + i)));

    BenchRow row;
    row.s_len = s_len;

    for (const bool local : {false, true}) {
      RunConfig rc = base;
      rc.attention = local ? "local-mono-unconst" : "global";
      ModelConfig mc = model_config_from(rc, vocab.size(), vocab.size());
      const Seq2SeqModel model = Seq2SeqModel::init(mc);
      const EncoderOutput enc = model.encode(src);

      reset_scorer_call_count();
      const auto start = std::chrono::steady_clock::now();
      DecoderState state = model.initial_state();
      int y_prev = kSosId;
      for (int t = 0; t < t_steps; ++t) {
        auto [logits, att, next] = model.decode_step(state, enc, y_prev);
        const std::vector<double>& x = logits.data();
        int tok = 0;
        for (int i = 1; i < static_cast<int>(x.size()); ++i)
          if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(tok)]) tok = i;
        state = std::move(next);
        y_prev = tok;  // fixed-T decoding: eos does not stop the loop
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (local) {
        row.local_calls = scorer_call_count();
        row.local_seconds = seconds;
      } else {
        row.global_calls = scorer_call_count();
        row.global_seconds = seconds;
      }
    }
    rows.push_back(row);
  }

  // Count assertions: the complexity claim, checked here so every bench run
  // enforces it.
  const std::uint64_t w = static_cast<std::uint64_t>(std::lround(cfg.two_sigma));
  const std::uint64_t cap = static_cast<std::uint64_t>(t_steps) * (2 * w + 1);
  std::uint64_t unclipped_calls = 0;
  for (const BenchRow& row : rows) {
    if (row.global_calls !=
        static_cast<std::uint64_t>(t_steps) * static_cast<std::uint64_t>(row.s_len))
      throw BenchAssertionError("global calls " + std::to_string(row.global_calls) +
                                " != T*S at S=" + std::to_string(row.s_len));
    if (row.local_calls > cap)
      throw BenchAssertionError("local calls " + std::to_string(row.local_calls) +
                                " exceed T*(2W+1)=" + std::to_string(cap) +
                                " at S=" + std::to_string(row.s_len));
    // Away from the right boundary the window never clips, so counts must
    // agree exactly across lengths.
    const bool clips = row.s_len <
                       t_steps + 1 + static_cast<int>(w) + 1;  // max center + halfwidth
    if (!clips) {
      if (unclipped_calls == 0)
        unclipped_calls = row.local_calls;
      else if (row.local_calls != unclipped_calls)
        throw BenchAssertionError("local calls vary with S: " +
                                  std::to_string(unclipped_calls) + " vs " +
                                  std::to_string(row.local_calls) + " at S=" +
                                  std::to_string(row.s_len));
    }
  }
  return rows;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  const std::vector<BenchRow> rows = run_bench(cfg);
  out << "s_len\tglobal_calls\tlocal_calls\tglobal_sec\tlocal_sec\n";
  for (const BenchRow& r : rows)
    out << r.s_len << '\t' << r.global_calls << '\t' << r.local_calls << '\t'
        << fmt("%.4f", r.global_seconds) << '\t' << fmt("%.4f", r.local_seconds) << '\n';
  return 0;
}

namespace {

void add_task_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--task", cfg.task, "Synthetic task (copy|expansion|toy-g2p|expansion-feat)")
      ->capture_default_str();
  sub->add_option("--train", cfg.train_path, "Training corpus TSV (overrides --task)");
  sub->add_option("--dev", cfg.dev_path, "Dev corpus TSV");
  sub->add_option("--test", cfg.test_path, "Test corpus TSV");
  sub->add_option("--train-n", cfg.train_n, "Synthetic training pairs")->capture_default_str();
  sub->add_option("--dev-n", cfg.dev_n, "Synthetic dev pairs")->capture_default_str();
  sub->add_option("--alphabet", cfg.alphabet, "Synthetic alphabet size")->capture_default_str();
  sub->add_option("--min-len", cfg.min_len, "Synthetic min source length")
      ->capture_default_str();
  sub->add_option("--gen-max-len", cfg.gen_max_len, "Synthetic max source length")
      ->capture_default_str();
  sub->add_option("--ratio-lo", cfg.ratio_lo, "Expansion ratio lower bound")
      ->capture_default_str();
  sub->add_option("--ratio-hi", cfg.ratio_hi, "Expansion ratio upper bound")
      ->capture_default_str();
  sub->add_option("--min-count", cfg.min_count, "Tokens rarer than this become unk")
      ->capture_default_str();
  sub->add_option("--feature-dim", cfg.feature_dim, "Feature width (expansion-feat)")
      ->capture_default_str();
  sub->add_option("--feature-noise", cfg.feature_noise, "Per-frame noise half-width")
      ->capture_default_str();
}

void add_model_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--attention", cfg.attention,
                  "Attention kind (global|local-m|local-mono-const|local-mono-unconst)")
      ->capture_default_str();
  sub->add_option("--scorer", cfg.scorer, "Scorer kind (dot|bilinear|mlp|none)")
      ->capture_default_str();
  sub->add_option("--two-sigma", cfg.two_sigma, "Gaussian window hyperparameter 2σ")
      ->capture_default_str();
  sub->add_option("--c-max", cfg.c_max, "Constrained-mode maximum step")
      ->capture_default_str();
  sub->add_option("--embed-dim", cfg.embed_dim, "Embedding width")->capture_default_str();
  sub->add_option("--enc-layers", cfg.enc_layers, "Encoder Bi-LSTM layers")
      ->capture_default_str();
  sub->add_option("--enc-hidden", cfg.enc_hidden, "Encoder hidden units per direction")
      ->capture_default_str();
  sub->add_option("--subsample", cfg.subsample,
                  "Encoder layers that halve the sequence (e.g. 0,1)");
  sub->add_option("--dec-layers", cfg.dec_layers, "Decoder LSTM layers")
      ->capture_default_str();
  sub->add_option("--dec-hidden", cfg.dec_hidden, "Decoder hidden units")
      ->capture_default_str();
  sub->add_option("--k-hidden", cfg.k_hidden, "Position-head / mlp-scorer hidden units")
      ->capture_default_str();
  sub->add_option("--local-m-ratio", cfg.local_m_ratio, "local-m center step ratio")
      ->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
}

void add_decode_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--beam", cfg.beam, "Beam size (1 = greedy)")->capture_default_str();
  sub->add_option("--alpha", cfg.alpha, "Length-penalty exponent")->capture_default_str();
  sub->add_option("--max-len", cfg.max_len, "Decode length cap")->capture_default_str();
}

}  // namespace

int run_cli(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Local monotonic attention sequence-to-sequence toolkit"};
  app.require_subcommand(1);
  // App-level config; subcommand keys live in "[train]"-style sections.
  // fallthrough lets "monoattn train --config f" reach the app's option.
  app.set_config("--config", "", "Read defaults from a config file");
  app.fallthrough();

  CLI::App* train = app.add_subcommand("train", "Train a model");
  add_task_flags(train, cfg);
  add_model_flags(train, cfg);
  add_decode_flags(train, cfg);
  train->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  train->add_option("--batch-size", cfg.batch_size, "Sequences per update")
      ->capture_default_str();
  train->add_option("--clip", cfg.clip, "Gradient-norm clip")->capture_default_str();
  train->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_task_flags(eval, cfg);
  add_decode_flags(eval, cfg);
  eval->add_option("--checkpoint", cfg.checkpoint, "Checkpoint path")->required();
  eval->add_option("--seed", cfg.seed, "Seed for synthetic eval corpora")
      ->capture_default_str();

  CLI::App* decode = app.add_subcommand("decode", "Decode one input");
  add_decode_flags(decode, cfg);
  decode->add_option("--checkpoint", cfg.checkpoint, "Checkpoint path")->required();
  decode->add_option("--input", cfg.input, "Space-separated source tokens");
  decode->add_option("--features", cfg.features, "Feature file (header 'S D')");

  CLI::App* align = app.add_subcommand("align", "Export alignment CSVs");
  add_task_flags(align, cfg);
  align->add_option("--checkpoint", cfg.checkpoint, "Checkpoint path")->required();
  align->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  align->add_option("--n", cfg.align_n, "Max items (0 = all)")->capture_default_str();
  align->add_option("--max-len", cfg.max_len, "Decode length cap")->capture_default_str();
  align->add_option("--seed", cfg.seed, "Seed for synthetic corpora")->capture_default_str();

  CLI::App* bench = app.add_subcommand("bench", "Scorer-invocation complexity benchmark");
  bench->add_option("--lengths", cfg.lengths, "Ascending encoder lengths")
      ->capture_default_str();
  bench->add_option("--t-steps", cfg.t_steps, "Decode steps per run")->capture_default_str();
  bench->add_option("--two-sigma", cfg.two_sigma, "Gaussian window hyperparameter 2σ")
      ->capture_default_str();
  bench->add_option("--scorer", cfg.scorer, "Scorer kind (dot|bilinear|mlp)")
      ->capture_default_str();
  bench->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(cfg, std::cout);
    if (eval->parsed()) return cmd_eval(cfg, std::cout);
    if (decode->parsed()) return cmd_decode(cfg, std::cout);
    if (align->parsed()) return cmd_align(cfg, std::cout);
    if (bench->parsed()) return cmd_bench(cfg, std::cout);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace monoattn
