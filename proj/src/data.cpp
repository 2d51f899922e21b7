#include "monoattn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace monoattn {

namespace {

const char* kReserved[] = {"<pad>", "<unk>", "<sos>", "<eos>"};

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Symbol names for synthetic alphabets: letters while they last, then s<i>.
std::string symbol_name(int i) {
  if (i < 26) return std::string(1, static_cast<char>('a' + i));
  return "s" + std::to_string(i);
}

void check_lengths(const SyntheticTaskSpec& spec) {
  if (spec.alphabet < 1) throw DomainError("gen_task: alphabet size must be >= 1");
  if (spec.min_len < 1 || spec.max_len < spec.min_len)
    throw DomainError("gen_task: invalid length range [" + std::to_string(spec.min_len) +
                      ", " + std::to_string(spec.max_len) + "]");
}

}  // namespace

Vocab::Vocab() {
  for (const char* t : kReserved) {
    token_to_id_.emplace(t, static_cast<int>(id_to_token_.size()));
    id_to_token_.emplace_back(t);
  }
}

int Vocab::add(const std::string& token) {
  auto [it, inserted] = token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  if (inserted) id_to_token_.push_back(token);
  return it->second;
}

int Vocab::encode(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(encode(t));
  return out;
}

const std::string& Vocab::decode(int id) const {
  if (id < 0 || id >= size())
    throw IndexError("vocab: id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(size()) + ")");
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(decode(id));
  return out;
}

bool Vocab::contains(const std::string& token) const {
  return token_to_id_.count(token) != 0;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& seqs, int min_count) {
  if (min_count < 1) throw DomainError("build_vocab: min_count must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& seq : seqs)
    for (const auto& tok : seq) ++counts[tok];
  std::vector<std::pair<std::string, long>> order(counts.begin(), counts.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  for (const auto& [tok, count] : order)
    if (count >= min_count) v.add(tok);
  return v;
}

std::vector<std::vector<std::string>> corpus_sources(const ParallelCorpus& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.size());
  for (const auto& item : corpus) out.push_back(item.source);
  return out;
}

std::vector<std::vector<std::string>> corpus_targets(const ParallelCorpus& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& item : corpus)
    for (const auto& ref : item.refs) out.push_back(ref);
  return out;
}

namespace {

ParallelCorpus gen_copy(const SyntheticTaskSpec& spec, int n) {
  Rng rng(spec.seed);
  ParallelCorpus corpus;
  corpus.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int len = rng.uniform_int(spec.min_len, spec.max_len);
    CorpusItem item;
    for (int j = 0; j < len; ++j) {
      item.source.push_back(symbol_name(rng.uniform_int(0, spec.alphabet - 1)));
      item.alignment.push_back(j);
    }
    item.refs.push_back(item.source);
    corpus.push_back(std::move(item));
  }
  return corpus;
}

ParallelCorpus gen_expansion(const SyntheticTaskSpec& spec, int n) {
  const int r_lo = static_cast<int>(std::ceil(spec.ratio_lo));
  const int r_hi = static_cast<int>(std::floor(spec.ratio_hi));
  if (spec.ratio_lo < 1.0 || r_hi < r_lo)
    throw DomainError("gen_task: expansion ratio range [" + std::to_string(spec.ratio_lo) +
                      ", " + std::to_string(spec.ratio_hi) + "] holds no integer >= 1");
  Rng rng(spec.seed);
  // Each alphabet symbol gets a fixed repeat count; cycling through the
  // range over a shuffled symbol order keeps the corpus mean ratio pinned
  // near the range midpoint. The symbol->repeat rule is part of the task
  // definition (like the g2p rule table), so it depends only on the
  // alphabet and ratio range — never on the sampling seed — keeping
  // differently seeded splits of one task consistent with each other.
  Rng map_rng(Rng::mix(Rng::mix(static_cast<std::uint64_t>(spec.alphabet),
                                static_cast<std::uint64_t>(r_lo)),
                       static_cast<std::uint64_t>(r_hi)));
  std::vector<int> symbol_order(static_cast<std::size_t>(spec.alphabet));
  for (int i = 0; i < spec.alphabet; ++i) symbol_order[static_cast<std::size_t>(i)] = i;
  map_rng.shuffle(symbol_order);
  std::vector<int> repeats(static_cast<std::size_t>(spec.alphabet));
  for (int i = 0; i < spec.alphabet; ++i)
    repeats[static_cast<std::size_t>(symbol_order[static_cast<std::size_t>(i)])] =
        r_lo + i % (r_hi - r_lo + 1);

  ParallelCorpus corpus;
  corpus.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int len = rng.uniform_int(spec.min_len, spec.max_len);
    CorpusItem item;
    std::vector<std::string> target;
    for (int j = 0; j < len; ++j) {
      const int sym = rng.uniform_int(0, spec.alphabet - 1);
      item.source.push_back(symbol_name(sym));
      for (int r = 0; r < repeats[static_cast<std::size_t>(sym)]; ++r) {
        target.push_back(symbol_name(sym));
        item.alignment.push_back(j);
      }
    }
    item.refs.push_back(std::move(target));
    corpus.push_back(std::move(item));
  }
  return corpus;
}

ParallelCorpus gen_toy_g2p(const SyntheticTaskSpec& spec, int n) {
  const std::vector<G2pRule> rules = load_g2p_rules(default_g2p_rules_path());
  std::vector<std::string> digraphs;
  for (const auto& r : rules)
    if (r.graphemes.size() == 2) digraphs.push_back(r.graphemes);
  Rng rng(spec.seed);
  ParallelCorpus corpus;
  corpus.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int len = rng.uniform_int(spec.min_len, spec.max_len);
    std::string word;
    while (static_cast<int>(word.size()) < len) {
      if (!digraphs.empty() && rng.uniform() < 0.3)
        word += digraphs[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(digraphs.size()) - 1))];
      else
        word += static_cast<char>('a' + rng.uniform_int(0, 25));
    }
    word.resize(static_cast<std::size_t>(len));
    CorpusItem item;
    for (char c : word) item.source.emplace_back(1, c);
    item.refs.push_back(apply_g2p(word, rules, &item.alignment));
    corpus.push_back(std::move(item));
  }
  return corpus;
}

}  // namespace

ParallelCorpus gen_task(const SyntheticTaskSpec& spec, int n) {
  if (n < 1) throw DomainError("gen_task: need n >= 1 items");
  check_lengths(spec);
  switch (spec.kind) {
    case TaskKind::Copy:
      return gen_copy(spec, n);
    case TaskKind::Expansion:
      return gen_expansion(spec, n);
    case TaskKind::ToyG2p:
      return gen_toy_g2p(spec, n);
  }
  throw DomainError("gen_task: unknown task kind");
}

ParallelCorpus load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  ParallelCorpus corpus;
  std::unordered_map<std::string, std::size_t> by_source;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'source<TAB>target'");
    if (line.find('\t', tab + 1) != std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": more than one tab");
    std::vector<std::string> src = split_ws(line.substr(0, tab));
    std::vector<std::string> tgt = split_ws(line.substr(tab + 1));
    if (src.empty())
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty source");
    if (tgt.empty())
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty target");
    const std::string key = join(src);
    auto it = by_source.find(key);
    if (it == by_source.end()) {
      by_source.emplace(key, corpus.size());
      corpus.push_back({std::move(src), {std::move(tgt)}, {}});
    } else {
      corpus[it->second].refs.push_back(std::move(tgt));
    }
  }
  if (corpus.empty()) throw EmptyCorpusError("no corpus entries in " + path);
  return corpus;
}

void save_tsv(const ParallelCorpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const auto& item : corpus)
    for (const auto& ref : item.refs) out << join(item.source) << '\t' << join(ref) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<G2pRule> load_g2p_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rule table: " + path);
  std::vector<G2pRule> rules;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'graphemes<TAB>phoneme'");
    G2pRule r{line.substr(0, tab), line.substr(tab + 1)};
    if (r.graphemes.size() > 2)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": grapheme side longer than 2 characters");
    rules.push_back(std::move(r));
  }
  if (rules.empty()) throw EmptyCorpusError("no rules in " + path);
  return rules;
}

std::string default_g2p_rules_path() {
  return std::string(MONOATTN_DATA_DIR) + "/toy_g2p_rules.tsv";
}

std::vector<std::string> apply_g2p(const std::string& word, const std::vector<G2pRule>& rules,
                                   std::vector<int>* align) {
  auto find_rule = [&rules](const std::string& g) -> const G2pRule* {
    for (const auto& r : rules)
      if (r.graphemes == g) return &r;
    return nullptr;
  };
  std::vector<std::string> out;
  if (align) align->clear();
  std::size_t i = 0;
  while (i < word.size()) {
    const G2pRule* r = nullptr;
    if (i + 1 < word.size()) r = find_rule(word.substr(i, 2));
    if (!r) r = find_rule(word.substr(i, 1));
    if (!r)
      throw DomainError("apply_g2p: no rule covers '" + word.substr(i, 1) + "' in \"" + word +
                        "\"");
    out.push_back(r->phoneme);
    if (align) align->push_back(static_cast<int>(i));
    i += r->graphemes.size();
  }
  return out;
}

namespace {

std::vector<Batch> chunk_and_shuffle(std::vector<EncodedItem> items, int batch_size,
                                     std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 1) throw DomainError("make_batches: batch_size must be >= 1");
  Rng rng(Rng::mix(seed, epoch));
  rng.shuffle(items);
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < items.size(); i += static_cast<std::size_t>(batch_size)) {
    Batch b;
    const std::size_t hi = std::min(items.size(), i + static_cast<std::size_t>(batch_size));
    b.items.assign(items.begin() + static_cast<std::ptrdiff_t>(i),
                   items.begin() + static_cast<std::ptrdiff_t>(hi));
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<int> encode_target(const Vocab& tgt_vocab, const std::vector<std::string>& ref) {
  std::vector<int> ids = tgt_vocab.encode(ref);
  ids.push_back(kEosId);
  return ids;
}

}  // namespace

std::vector<Batch> make_batches(const ParallelCorpus& corpus, const Vocab& src_vocab,
                                const Vocab& tgt_vocab, int batch_size, std::uint64_t seed,
                                std::uint64_t epoch) {
  if (corpus.empty()) throw EmptyCorpusError("make_batches: empty corpus");
  std::vector<EncodedItem> items;
  for (const auto& item : corpus) {
    if (item.source.empty()) throw EmptySequenceError("make_batches: empty source");
    for (const auto& ref : item.refs) {
      if (ref.empty()) throw EmptySequenceError("make_batches: empty reference");
      items.push_back({src_vocab.encode(item.source), {}, encode_target(tgt_vocab, ref)});
    }
  }
  return chunk_and_shuffle(std::move(items), batch_size, seed, epoch);
}

FeatureCorpus render_features(const ParallelCorpus& corpus, int dim, double noise,
                              std::uint64_t seed) {
  if (dim < 1) throw DomainError("render_features: dim must be >= 1");
  if (noise < 0.0) throw DomainError("render_features: negative noise width");
  // Fixed per-symbol base vectors, drawn once from the seed.
  std::unordered_map<std::string, std::vector<double>> base;
  Rng proto_rng(Rng::mix(seed, 0x66656174));  // separate stream for prototypes
  auto base_of = [&](const std::string& sym) -> const std::vector<double>& {
    auto it = base.find(sym);
    if (it == base.end()) {
      std::vector<double> v(static_cast<std::size_t>(dim));
      for (double& x : v) x = proto_rng.uniform(-1.0, 1.0);
      it = base.emplace(sym, std::move(v)).first;
    }
    return it->second;
  };
  // Prototype vectors must not depend on corpus order: pre-touch symbols in
  // sorted order so identical symbol sets give identical prototypes.
  std::map<std::string, int> symbols;
  for (const auto& item : corpus)
    for (const auto& s : item.source) symbols.emplace(s, 0);
  for (const auto& [s, unused] : symbols) base_of(s);

  Rng rng(seed);
  FeatureCorpus out;
  out.reserve(corpus.size());
  for (const auto& item : corpus) {
    FeatureItem fi;
    fi.refs = item.refs;
    for (const auto& sym : item.source) {
      std::vector<double> frame = base_of(sym);
      for (double& x : frame) x += rng.uniform(-noise, noise);
      fi.frames.push_back(std::move(frame));
    }
    out.push_back(std::move(fi));
  }
  return out;
}

std::vector<Batch> make_feature_batches(const FeatureCorpus& corpus, const Vocab& tgt_vocab,
                                        int batch_size, std::uint64_t seed,
                                        std::uint64_t epoch) {
  if (corpus.empty()) throw EmptyCorpusError("make_feature_batches: empty corpus");
  std::vector<EncodedItem> items;
  for (const auto& item : corpus) {
    if (item.frames.empty()) throw EmptySequenceError("make_feature_batches: empty frames");
    for (const auto& ref : item.refs) {
      if (ref.empty()) throw EmptySequenceError("make_feature_batches: empty reference");
      items.push_back({{}, item.frames, encode_target(tgt_vocab, ref)});
    }
  }
  return chunk_and_shuffle(std::move(items), batch_size, seed, epoch);
}

void save_features(const std::vector<std::vector<double>>& frames, const std::string& path) {
  if (frames.empty()) throw EmptySequenceError("save_features: no frames");
  const std::size_t dim = frames[0].size();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write feature file: " + path);
  out << frames.size() << ' ' << dim << '\n';
  for (const auto& frame : frames) {
    if (frame.size() != dim)
      throw ShapeError("save_features: ragged frame widths " + std::to_string(frame.size()) +
                       " vs " + std::to_string(dim));
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (i) out << ' ';
      out << fmt17(frame[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::vector<double>> load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file: " + path);
  long s = 0, d = 0;
  if (!(in >> s >> d) || s < 1 || d < 1)
    throw ParseError(path + ": malformed header, expected 'S D'");
  std::vector<std::vector<double>> frames(static_cast<std::size_t>(s));
  for (long i = 0; i < s; ++i) {
    auto& frame = frames[static_cast<std::size_t>(i)];
    frame.resize(static_cast<std::size_t>(d));
    for (long j = 0; j < d; ++j)
      if (!(in >> frame[static_cast<std::size_t>(j)]))
        throw ParseError(path + ": truncated at frame " + std::to_string(i) + " value " +
                         std::to_string(j));
  }
  return frames;
}

}  // namespace monoattn
