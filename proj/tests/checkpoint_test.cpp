#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "monoattn/checkpoint.hpp"
#include "util.hpp"

using namespace monoattn;
using testutil::TempDir;

namespace {

struct TrainedWorld {
  ParallelCorpus corpus;
  Vocab src;
  Vocab tgt;
  Seq2SeqModel model;
  AdamState adam;
};

TrainedWorld trained_world(int epochs, AttentionKind kind = AttentionKind::LocalMonoUnconst) {
  SyntheticTaskSpec spec;
  spec.kind = TaskKind::Copy;
  spec.alphabet = 6;
  spec.min_len = 3;
  spec.max_len = 5;
  spec.seed = 19;
  TrainedWorld w{gen_task(spec, 10), {}, {}, {}, {}};
  w.src = build_vocab(corpus_sources(w.corpus), 1);
  w.tgt = build_vocab(corpus_targets(w.corpus), 1);

  ModelConfig mc;
  mc.src_vocab = w.src.size();
  mc.tgt_vocab = w.tgt.size();
  mc.embed_dim = 6;
  mc.enc_hidden = 4;
  mc.enc_layers = 2;
  mc.subsample_layers = {0};
  mc.dec_hidden = 8;
  mc.k_hidden = 4;
  mc.attention = kind;
  mc.seed = 23;
  w.model = Seq2SeqModel::init(mc);
  w.adam.lr = 1e-3;
  for (int e = 1; e <= epochs; ++e)
    train_epoch(w.model, make_batches(w.corpus, w.src, w.tgt, 4, 3, static_cast<std::uint64_t>(e)),
                w.adam, 5.0);
  return w;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save, load, save again is byte-identical") {
  TempDir dir("ckpt_rt");
  TrainedWorld w = trained_world(2);

  for (bool with_adam : {false, true}) {
    const Checkpoint ckpt = make_checkpoint(w.model, w.src, w.tgt, 2, {9, 8, 7, 6},
                                            with_adam ? &w.adam : nullptr);
    const std::string p1 = dir.file(with_adam ? "a1.ckpt" : "b1.ckpt");
    const std::string p2 = dir.file(with_adam ? "a2.ckpt" : "b2.ckpt");
    save_checkpoint(ckpt, p1);
    const Checkpoint loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p2);
    const std::string bytes1 = testutil::read_file(p1);
    const std::string bytes2 = testutil::read_file(p2);
    REQUIRE(!bytes1.empty());
    CHECK(bytes1 == bytes2);

    CHECK(loaded.epoch == 2);
    CHECK(loaded.rng_state == std::array<std::uint64_t, 4>{9, 8, 7, 6});
    CHECK(loaded.adam.has_value() == with_adam);
  }
}

TEST_CASE("a restored model reproduces the saved model's arithmetic exactly") {
  TempDir dir("ckpt_math");
  TrainedWorld w = trained_world(1);
  const Checkpoint ckpt = make_checkpoint(w.model, w.src, w.tgt, 1, {1, 2, 3, 4});
  save_checkpoint(ckpt, dir.file("m.ckpt"));

  Vocab src2, tgt2;
  Seq2SeqModel restored = restore_model(load_checkpoint(dir.file("m.ckpt")), &src2, &tgt2);

  CHECK(src2.tokens() == w.src.tokens());
  CHECK(tgt2.tokens() == w.tgt.tokens());

  const std::vector<int> src_ids = w.src.encode(w.corpus[0].source);
  std::vector<int> tgt_ids = w.tgt.encode(w.corpus[0].refs[0]);
  tgt_ids.push_back(kEosId);
  const double a = w.model.forward_loss(src_ids, tgt_ids).value();
  const double b = restored.forward_loss(src_ids, tgt_ids).value();
  CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);

  // Every parameter round-trips bit for bit.
  std::vector<NamedParam> pa = w.model.parameters();
  std::vector<NamedParam> pb = restored.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(pa[i].tensor.data() == pb[i].tensor.data());
  }
}

TEST_CASE("resumed training walks the same trajectory") {
  TempDir dir("ckpt_resume");
  TrainedWorld w = trained_world(1);
  const Checkpoint ckpt = make_checkpoint(w.model, w.src, w.tgt, 1, {0, 0, 0, 1}, &w.adam);
  save_checkpoint(ckpt, dir.file("resume.ckpt"));

  // Continue the original for one more epoch.
  train_epoch(w.model, make_batches(w.corpus, w.src, w.tgt, 4, 3, 2), w.adam, 5.0);

  // Restore and run the identical epoch.
  const Checkpoint loaded = load_checkpoint(dir.file("resume.ckpt"));
  Vocab src2, tgt2;
  Seq2SeqModel twin = restore_model(loaded, &src2, &tgt2);
  AdamState adam2 = *loaded.adam;
  train_epoch(twin, make_batches(w.corpus, src2, tgt2, 4, 3, 2), adam2, 5.0);

  std::vector<NamedParam> pa = w.model.parameters();
  std::vector<NamedParam> pb = twin.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].tensor.data() == pb[i].tensor.data());
  CHECK(adam2.step == w.adam.step);
}

TEST_CASE("feature-mode checkpoints restore the projection front end") {
  TempDir dir("ckpt_feat");
  SyntheticTaskSpec spec;
  spec.kind = TaskKind::Expansion;
  spec.alphabet = 5;
  spec.min_len = 3;
  spec.max_len = 4;
  spec.seed = 4;
  ParallelCorpus corpus = gen_task(spec, 5);
  Vocab tgt = build_vocab(corpus_targets(corpus), 1);
  FeatureCorpus feats = render_features(corpus, 5, 0.1, 3);

  ModelConfig mc;
  mc.input_mode = InputMode::Features;
  mc.feature_dim = 5;
  mc.tgt_vocab = tgt.size();
  mc.embed_dim = 6;
  mc.enc_hidden = 4;
  mc.dec_hidden = 8;
  mc.k_hidden = 4;
  mc.seed = 8;
  Seq2SeqModel model = Seq2SeqModel::init(mc);

  Vocab empty_src;
  save_checkpoint(make_checkpoint(model, empty_src, tgt, 0, {1, 1, 1, 1}),
                  dir.file("feat.ckpt"));
  Vocab tgt2;
  Seq2SeqModel restored = restore_model(load_checkpoint(dir.file("feat.ckpt")), nullptr, &tgt2);
  CHECK(restored.config.input_mode == InputMode::Features);
  CHECK(tgt2.tokens() == tgt.tokens());

  const double a = sum(model.encode_features(feats[0].frames).states).value();
  const double b = sum(restored.encode_features(feats[0].frames).states).value();
  CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
}

TEST_CASE("malformed checkpoints fail with the precise category") {
  TempDir dir("ckpt_err");
  TrainedWorld w = trained_world(1);
  save_checkpoint(make_checkpoint(w.model, w.src, w.tgt, 0, {1, 2, 3, 4}, &w.adam),
                  dir.file("good.ckpt"));
  const std::vector<std::string> lines = split_lines(testutil::read_file(dir.file("good.ckpt")));
  REQUIRE(lines.size() > 30);
  REQUIRE(lines[0] == "MONOATTN-CKPT v1");

  // Wrong magic/version line.
  std::vector<std::string> bad = lines;
  bad[0] = "MONOATTN-CKPT v2";
  testutil::write_file(dir.file("version.ckpt"), join_lines(bad));
  CHECK_THROWS_AS(load_checkpoint(dir.file("version.ckpt")), CheckpointVersionError);

  // Cut off before the end marker.
  std::vector<std::string> cut(lines.begin(), lines.end() - 4);
  testutil::write_file(dir.file("cut.ckpt"), join_lines(cut));
  CHECK_THROWS_AS(load_checkpoint(dir.file("cut.ckpt")), CheckpointTruncatedError);

  // A parameter line with too few values.
  std::vector<std::string> short_vals = lines;
  for (std::size_t i = 0; i + 1 < short_vals.size(); ++i) {
    if (short_vals[i].rfind("out.bias", 0) == 0) {
      const auto cutpos = short_vals[i + 1].rfind(' ');
      REQUIRE(cutpos != std::string::npos);
      short_vals[i + 1] = short_vals[i + 1].substr(0, cutpos);
      break;
    }
  }
  testutil::write_file(dir.file("short.ckpt"), join_lines(short_vals));
  CHECK_THROWS_AS(load_checkpoint(dir.file("short.ckpt")), CheckpointTruncatedError);

  // A parameter line with too many values.
  std::vector<std::string> long_vals = lines;
  for (std::size_t i = 0; i + 1 < long_vals.size(); ++i) {
    if (long_vals[i].rfind("out.bias", 0) == 0) {
      long_vals[i + 1] += " 0.25";
      break;
    }
  }
  testutil::write_file(dir.file("long.ckpt"), join_lines(long_vals));
  CHECK_THROWS_AS(load_checkpoint(dir.file("long.ckpt")), CheckpointShapeError);

  // A keyword out of place.
  std::vector<std::string> keyed = lines;
  for (auto& l : keyed)
    if (l.rfind("epoch ", 0) == 0) {
      l = "epochs 0";
      break;
    }
  testutil::write_file(dir.file("keyed.ckpt"), join_lines(keyed));
  CHECK_THROWS_AS(load_checkpoint(dir.file("keyed.ckpt")), CheckpointFormatError);

  CHECK_THROWS_AS(load_checkpoint(dir.file("nonexistent.ckpt")), IoError);

  // Truncated mid-file still names the failure as truncation.
  testutil::write_file(dir.file("magic_only.ckpt"), "MONOATTN-CKPT v1\n");
  CHECK_THROWS_AS(load_checkpoint(dir.file("magic_only.ckpt")), CheckpointTruncatedError);
}

}  // TEST_SUITE
