#include "monoattn/decoding.hpp"

#include <algorithm>
#include <cmath>

namespace monoattn {

namespace {

std::vector<double> log_softmax(const Tensor& logits) {
  const std::vector<double>& x = logits.data();
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  return best;
}

double length_norm(double log_prob, std::size_t len, double alpha) {
  const double n = static_cast<double>(std::max<std::size_t>(1, len));
  return log_prob / std::pow(n, alpha);
}

}  // namespace

DecodeResult greedy_decode(const Seq2SeqModel& model, const EncoderOutput& enc, int max_len) {
  if (max_len < 1) throw DomainError("greedy_decode: max_len must be >= 1");
  DecodeResult res;
  DecoderState state = model.initial_state();
  int y_prev = kSosId;
  for (int t = 0; t < max_len; ++t) {
    auto [logits, att, next] = model.decode_step(state, enc, y_prev);
    const std::vector<double> lp = log_softmax(logits);
    const int tok = argmax_lowest(lp);
    res.log_prob += lp[static_cast<std::size_t>(tok)];
    if (tok == kEosId) return res;
    res.tokens.push_back(tok);
    state = std::move(next);
    y_prev = tok;
  }
  res.truncated = true;
  return res;
}

DecodeResult greedy_decode(const Seq2SeqModel& model, const std::vector<int>& src_ids,
                           int max_len) {
  return greedy_decode(model, model.encode(src_ids), max_len);
}

std::vector<BeamHypothesis> beam_decode(const Seq2SeqModel& model, const EncoderOutput& enc,
                                        int beam, double alpha, int max_len) {
  if (beam < 1) throw DomainError("beam_decode: beam must be >= 1");
  if (max_len < 1) throw DomainError("beam_decode: max_len must be >= 1");

  struct Hyp {
    std::vector<int> tokens;  // eos never stored
    double log_prob = 0.0;
    DecoderState state;  // consumed together with last_token by the next step
    int last_token = kSosId;
    bool truncated = false;
  };

  std::vector<Hyp> active(1);
  active[0].state = model.initial_state();
  std::vector<Hyp> finished;

  for (int t = 0; t < max_len && !active.empty(); ++t) {
    struct Candidate {
      double log_prob;
      std::size_t parent;
      int token;
    };
    std::vector<Candidate> candidates;
    std::vector<DecoderState> advanced(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      auto [logits, att, next] = model.decode_step(active[i].state, enc, active[i].last_token);
      advanced[i] = std::move(next);
      const std::vector<double> lp = log_softmax(logits);
      for (int v = 0; v < static_cast<int>(lp.size()); ++v)
        candidates.push_back({active[i].log_prob + lp[static_cast<std::size_t>(v)], i, v});
    }
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(beam),
                                                   candidates.size());
    std::partial_sort(candidates.begin(),
                      candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hyp> next_active;
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate& cand = candidates[c];
      Hyp h;
      h.tokens = active[cand.parent].tokens;
      h.log_prob = cand.log_prob;
      h.state = advanced[cand.parent];
      h.last_token = cand.token;
      if (cand.token == kEosId) {
        finished.push_back(std::move(h));
      } else {
        h.tokens.push_back(cand.token);
        next_active.push_back(std::move(h));
      }
    }
    active = std::move(next_active);
  }
  for (Hyp& h : active) {
    h.truncated = true;
    finished.push_back(std::move(h));
  }

  std::vector<BeamHypothesis> out;
  out.reserve(finished.size());
  for (const Hyp& h : finished)
    out.push_back({h.tokens, h.log_prob, length_norm(h.log_prob, h.tokens.size(), alpha),
                   h.truncated});
  std::sort(out.begin(), out.end(), [](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.norm_score != b.norm_score) return a.norm_score > b.norm_score;
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  });
  if (out.size() > static_cast<std::size_t>(beam)) out.resize(static_cast<std::size_t>(beam));
  return out;
}

std::vector<BeamHypothesis> beam_decode(const Seq2SeqModel& model,
                                        const std::vector<int>& src_ids, int beam,
                                        double alpha, int max_len) {
  return beam_decode(model, model.encode(src_ids), beam, alpha, max_len);
}

namespace {

template <typename T>
EditCounts edit_distance_impl(const std::vector<T>& hyp, const std::vector<T>& ref) {
  const std::size_t m = hyp.size();
  const std::size_t n = ref.size();
  std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
  for (std::size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= n; ++j) {
      const int sub = d[i - 1][j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      const int del = d[i - 1][j] + 1;  // hyp[i-1] is an insertion error
      const int ins = d[i][j - 1] + 1;  // ref[j-1] was deleted
      d[i][j] = std::min({sub, del, ins});
    }
  // Trace one minimal path to decompose the distance.
  EditCounts counts;
  counts.distance = d[m][n];
  std::size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) ++counts.subs;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++counts.ins;
      --i;
    } else {
      ++counts.dels;
      --j;
    }
  }
  return counts;
}

}  // namespace

EditCounts edit_distance(const std::vector<int>& hyp, const std::vector<int>& ref) {
  return edit_distance_impl(hyp, ref);
}

EditCounts edit_distance(const std::vector<std::string>& hyp,
                         const std::vector<std::string>& ref) {
  return edit_distance_impl(hyp, ref);
}

MultiRefScore score_multi_ref(const std::vector<std::string>& hyp,
                              const std::vector<std::vector<std::string>>& refs) {
  if (refs.empty()) throw EmptySequenceError("score_multi_ref: no references");
  MultiRefScore best;
  double best_rate = 0.0;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const EditCounts counts = edit_distance(hyp, refs[r]);
    const int len = static_cast<int>(refs[r].size());
    const double rate =
        static_cast<double>(counts.distance) / static_cast<double>(std::max(1, len));
    const bool better =
        r == 0 || rate < best_rate || (rate == best_rate && len < best.ref_len);
    if (better) {
      best.counts = counts;
      best.ref_index = r;
      best.ref_len = len;
      best_rate = rate;
    }
    if (counts.distance == 0) best.exact_match = true;
  }
  return best;
}

EvalReport evaluate(const Seq2SeqModel& model, const ParallelCorpus& corpus,
                    const Vocab& src_vocab, const Vocab& tgt_vocab, int beam, double alpha,
                    int max_len) {
  if (corpus.empty()) throw EmptyCorpusError("evaluate: empty corpus");
  EvalReport report;
  for (const auto& item : corpus) {
    const std::vector<int> src = src_vocab.encode(item.source);
    std::vector<int> hyp_ids;
    if (beam > 1) {
      const auto hyps = beam_decode(model, src, beam, alpha, max_len);
      if (!hyps.empty()) hyp_ids = hyps[0].tokens;
    } else {
      hyp_ids = greedy_decode(model, src, max_len).tokens;
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

}  // namespace monoattn
