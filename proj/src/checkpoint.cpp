#include "monoattn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace monoattn {

namespace {

constexpr const char* kMagic = "MONOATTN-CKPT v1";

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_values(const std::vector<double>& vals) {
  std::string out;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) out += ' ';
    out += fmt17(vals[i]);
  }
  return out;
}

std::string join_subsample(const std::set<int>& layers) {
  if (layers.empty()) return "-";
  std::string out;
  for (int l : layers) {
    if (!out.empty()) out += ',';
    out += std::to_string(l);
  }
  return out;
}

std::set<int> parse_subsample(const std::string& s) {
  std::set<int> out;
  if (s == "-") return out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ','))
    out.insert(std::stoi(part));
  return out;
}

// Line-oriented reader that distinguishes truncation from malformed content.
class Reader {
 public:
  explicit Reader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  std::string line(const std::string& expected) {
    std::string l;
    if (!std::getline(in_, l))
      throw CheckpointTruncatedError(path_ + ": file ends where " + expected + " expected");
    ++line_no_;
    if (!l.empty() && l.back() == '\r') l.pop_back();
    return l;
  }

  // "key rest..." line; returns rest.
  std::string keyed(const std::string& key) {
    std::string l = line("'" + key + " ...'");
    if (l.rfind(key + " ", 0) != 0)
      throw CheckpointFormatError(path_ + ":" + std::to_string(line_no_) + ": expected '" +
                                  key + " ...', got \"" + l + "\"");
    return l.substr(key.size() + 1);
  }

  long line_no() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::istream& in_;
  std::string path_;
  long line_no_ = 0;
};

std::vector<double> parse_values(Reader& r, const std::string& name, std::size_t expected,
                                 const std::string& prefix = "") {
  std::string l = r.line("values of '" + name + "'");
  std::istringstream in(l);
  if (!prefix.empty()) {
    std::string head;
    in >> head;
    if (head != prefix)
      throw CheckpointFormatError(r.path() + ":" + std::to_string(r.line_no()) +
                                  ": expected '" + prefix + "' values for '" + name + "'");
  }
  std::vector<double> vals;
  vals.reserve(expected);
  double v = 0.0;
  while (in >> v) vals.push_back(v);
  if (vals.size() < expected)
    throw CheckpointTruncatedError("parameter '" + name + "': expected " +
                                   std::to_string(expected) + " values, found " +
                                   std::to_string(vals.size()));
  if (vals.size() > expected)
    throw CheckpointShapeError("parameter '" + name + "': expected " +
                               std::to_string(expected) + " values, found " +
                               std::to_string(vals.size()));
  return vals;
}

}  // namespace

Checkpoint make_checkpoint(const Seq2SeqModel& model, const Vocab& src_vocab,
                           const Vocab& tgt_vocab, long epoch,
                           const std::array<std::uint64_t, 4>& rng_state,
                           const AdamState* adam) {
  Checkpoint ckpt;
  ckpt.epoch = epoch;
  ckpt.rng_state = rng_state;
  ckpt.config = model.config;
  const auto& src_all = src_vocab.tokens();
  const auto& tgt_all = tgt_vocab.tokens();
  ckpt.src_tokens.assign(src_all.begin() + 4, src_all.end());
  ckpt.tgt_tokens.assign(tgt_all.begin() + 4, tgt_all.end());
  for (const auto& p : model.parameters()) ckpt.params.emplace_back(p.name, p.tensor);
  if (adam) {
    ckpt.adam = *adam;
    if (ckpt.adam->m.size() != ckpt.params.size()) {  // never stepped: zero slots
      std::vector<NamedParam> params = model.parameters();
      ckpt.adam->init(params);
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const ModelConfig& c = ckpt.config;
  out << kMagic << '\n';
  out << "epoch " << ckpt.epoch << '\n';
  out << "rng " << ckpt.rng_state[0] << ' ' << ckpt.rng_state[1] << ' ' << ckpt.rng_state[2]
      << ' ' << ckpt.rng_state[3] << '\n';
  out << "config input_mode " << to_string(c.input_mode) << '\n';
  out << "config src_vocab " << c.src_vocab << '\n';
  out << "config tgt_vocab " << c.tgt_vocab << '\n';
  out << "config feature_dim " << c.feature_dim << '\n';
  out << "config embed_dim " << c.embed_dim << '\n';
  out << "config enc_layers " << c.enc_layers << '\n';
  out << "config enc_hidden " << c.enc_hidden << '\n';
  out << "config subsample_layers " << join_subsample(c.subsample_layers) << '\n';
  out << "config dec_layers " << c.dec_layers << '\n';
  out << "config dec_hidden " << c.dec_hidden << '\n';
  out << "config attention " << to_string(c.attention) << '\n';
  out << "config scorer " << to_string(c.scorer) << '\n';
  out << "config two_sigma " << fmt17(c.two_sigma) << '\n';
  out << "config c_max " << fmt17(c.c_max) << '\n';
  out << "config k_hidden " << c.k_hidden << '\n';
  out << "config local_m_ratio " << fmt17(c.local_m_ratio) << '\n';
  out << "config seed " << c.seed << '\n';
  out << "vocab src " << ckpt.src_tokens.size() << '\n';
  for (const auto& t : ckpt.src_tokens) out << t << '\n';
  out << "vocab tgt " << ckpt.tgt_tokens.size() << '\n';
  for (const auto& t : ckpt.tgt_tokens) out << t << '\n';
  out << "params " << ckpt.params.size() << '\n';
  for (const auto& [name, tensor] : ckpt.params) {
    out << name << ' ' << tensor.ndim();
    for (int d : tensor.shape()) out << ' ' << d;
    out << '\n' << join_values(tensor.data()) << '\n';
  }
  out << "adam " << (ckpt.adam ? 1 : 0) << '\n';
  if (ckpt.adam) {
    const AdamState& a = *ckpt.adam;
    out << "step " << a.step << " lr " << fmt17(a.lr) << " beta1 " << fmt17(a.beta1)
        << " beta2 " << fmt17(a.beta2) << " eps " << fmt17(a.eps) << '\n';
    for (std::size_t i = 0; i < a.m.size(); ++i) {
      out << "m " << join_values(a.m[i]) << '\n';
      out << "v " << join_values(a.v[i]) << '\n';
    }
  }
  out << "end\n";
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  Reader r(in, path);

  const std::string magic = r.line("format header");
  if (magic != kMagic)
    throw CheckpointVersionError(path + ": format header \"" + magic + "\" is not \"" +
                                 kMagic + "\"");

  Checkpoint ckpt;
  ckpt.epoch = std::stol(r.keyed("epoch"));
  {
    std::istringstream rng(r.keyed("rng"));
    for (auto& w : ckpt.rng_state)
      if (!(rng >> w)) throw CheckpointFormatError(path + ": malformed rng state");
  }

  ModelConfig& c = ckpt.config;
  auto config_value = [&r](const std::string& key) {
    return r.keyed("config " + key);
  };
  c.input_mode = parse_input_mode(config_value("input_mode"));
  c.src_vocab = std::stoi(config_value("src_vocab"));
  c.tgt_vocab = std::stoi(config_value("tgt_vocab"));
  c.feature_dim = std::stoi(config_value("feature_dim"));
  c.embed_dim = std::stoi(config_value("embed_dim"));
  c.enc_layers = std::stoi(config_value("enc_layers"));
  c.enc_hidden = std::stoi(config_value("enc_hidden"));
  c.subsample_layers = parse_subsample(config_value("subsample_layers"));
  c.dec_layers = std::stoi(config_value("dec_layers"));
  c.dec_hidden = std::stoi(config_value("dec_hidden"));
  c.attention = parse_attention_kind(config_value("attention"));
  c.scorer = parse_scorer_kind(config_value("scorer"));
  c.two_sigma = std::stod(config_value("two_sigma"));
  c.c_max = std::stod(config_value("c_max"));
  c.k_hidden = std::stoi(config_value("k_hidden"));
  c.local_m_ratio = std::stod(config_value("local_m_ratio"));
  c.seed = std::stoull(config_value("seed"));

  const long n_src = std::stol(r.keyed("vocab src"));
  for (long i = 0; i < n_src; ++i) ckpt.src_tokens.push_back(r.line("source vocab entry"));
  const long n_tgt = std::stol(r.keyed("vocab tgt"));
  for (long i = 0; i < n_tgt; ++i) ckpt.tgt_tokens.push_back(r.line("target vocab entry"));
  if (c.input_mode == InputMode::Tokens &&
      c.src_vocab != static_cast<int>(ckpt.src_tokens.size()) + 4)
    throw CheckpointFormatError(path + ": src_vocab " + std::to_string(c.src_vocab) +
                                " disagrees with " + std::to_string(ckpt.src_tokens.size()) +
                                " stored tokens");
  if (c.tgt_vocab != static_cast<int>(ckpt.tgt_tokens.size()) + 4)
    throw CheckpointFormatError(path + ": tgt_vocab " + std::to_string(c.tgt_vocab) +
                                " disagrees with " + std::to_string(ckpt.tgt_tokens.size()) +
                                " stored tokens");

  const long n_params = std::stol(r.keyed("params"));
  for (long i = 0; i < n_params; ++i) {
    std::string header = r.line("parameter header");
    std::istringstream h(header);
    std::string name;
    int ndim = 0;
    if (!(h >> name >> ndim) || ndim < 1)
      throw CheckpointFormatError(path + ": malformed parameter header \"" + header + "\"");
    std::vector<int> shape(static_cast<std::size_t>(ndim));
    std::size_t numel = 1;
    for (int d = 0; d < ndim; ++d) {
      if (!(h >> shape[static_cast<std::size_t>(d)]) || shape[static_cast<std::size_t>(d)] < 1)
        throw CheckpointFormatError(path + ": malformed shape for parameter '" + name + "'");
      numel *= static_cast<std::size_t>(shape[static_cast<std::size_t>(d)]);
    }
    std::vector<double> vals = parse_values(r, name, numel);
    ckpt.params.emplace_back(name, Tensor::from(shape, std::move(vals), true));
  }

  const int has_adam = std::stoi(r.keyed("adam"));
  if (has_adam) {
    AdamState a;
    std::istringstream h(r.line("adam header"));
    std::string k1, k2, k3, k4, k5;
    if (!(h >> k1 >> a.step >> k2 >> a.lr >> k3 >> a.beta1 >> k4 >> a.beta2 >> k5 >> a.eps) ||
        k1 != "step" || k2 != "lr" || k3 != "beta1" || k4 != "beta2" || k5 != "eps")
      throw CheckpointFormatError(path + ": malformed adam header");
    for (const auto& [name, tensor] : ckpt.params) {
      a.m.push_back(parse_values(r, name, tensor.numel(), "m"));
      a.v.push_back(parse_values(r, name, tensor.numel(), "v"));
    }
    ckpt.adam = std::move(a);
  }
  const std::string tail = r.line("'end' marker");
  if (tail != "end")
    throw CheckpointFormatError(path + ": expected 'end' marker, got \"" + tail + "\"");
  return ckpt;
}

Seq2SeqModel restore_model(const Checkpoint& ckpt, Vocab* src_vocab, Vocab* tgt_vocab) {
  Seq2SeqModel model = Seq2SeqModel::init(ckpt.config);
  std::vector<NamedParam> params = model.parameters();
  if (params.size() != ckpt.params.size())
    throw CheckpointShapeError("checkpoint has " + std::to_string(ckpt.params.size()) +
                               " parameters, model wants " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, saved] = ckpt.params[i];
    if (params[i].name != name)
      throw CheckpointShapeError("parameter " + std::to_string(i) + " is '" + name +
                                 "', model wants '" + params[i].name + "'");
    if (params[i].tensor.shape() != saved.shape())
      throw CheckpointShapeError("parameter '" + name + "': saved shape " +
                                 shape_str(saved.shape()) + " vs model shape " +
                                 shape_str(params[i].tensor.shape()));
    params[i].tensor.data() = saved.data();
  }
  if (src_vocab) {
    *src_vocab = Vocab();
    for (const auto& t : ckpt.src_tokens) src_vocab->add(t);
  }
  if (tgt_vocab) {
    *tgt_vocab = Vocab();
    for (const auto& t : ckpt.tgt_tokens) tgt_vocab->add(t);
  }
  return model;
}

}  // namespace monoattn
