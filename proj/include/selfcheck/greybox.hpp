#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "selfcheck/backends.hpp"
#include "selfcheck/core.hpp"
#include "selfcheck/error.hpp"

namespace selfcheck::greybox {

// Tokens of one response sentence, as scored by the generating LLM (grey-box)
// or by a proxy LLM. The metrics below do not distinguish the two.
struct SentenceTokenRun {
  std::size_t sentence_index = 0;
  std::vector<TokenScore> tokens;

  std::size_t size() const { return tokens.size(); }
};

enum class EntropyMode {
  Nats,      // -sum p ln p
  Exp2Bits,  // 2^(-sum p log2 p)
};

struct EntropyOptions {
  EntropyMode mode = EntropyMode::Nats;
  // Rescale the top-k probabilities to sum to 1 first.
  bool renormalize = false;
};

inline void check_run(const SentenceTokenRun& run) {
  if (run.tokens.empty()) throw Error(ErrorKind::Precondition, "empty token run");
  for (const auto& t : run.tokens) {
    if (!std::isfinite(t.logprob)) throw Error(ErrorKind::Precondition, "non-finite logprob in token run");
  }
}

inline double avg_neg_logprob(const SentenceTokenRun& run) {
  check_run(run);
  double sum = 0.0;
  for (const auto& t : run.tokens) sum -= t.logprob;
  return sum / static_cast<double>(run.tokens.size());
}

inline double max_neg_logprob(const SentenceTokenRun& run) {
  check_run(run);
  double best = 0.0;
  for (const auto& t : run.tokens) best = std::max(best, -t.logprob);
  return best;
}

// Entropy over the listed alternatives only; the tail mass outside the
// top-k is not modelled.
inline double entropy(std::span<const TopToken> dist, EntropyOptions options = {}) {
  if (dist.empty()) throw Error(ErrorKind::Precondition, "entropy of an empty distribution");
  double mass = 0.0;
  for (const auto& e : dist) {
    if (!(e.prob > 0.0 && e.prob <= 1.0)) throw Error(ErrorKind::Precondition, "probability outside (0,1]");
    mass += e.prob;
  }
  const double scale = options.renormalize ? 1.0 / mass : 1.0;
  double h = 0.0;
  for (const auto& e : dist) {
    const double p = e.prob * scale;
    h -= p * std::log(p);
  }
  if (options.mode == EntropyMode::Exp2Bits) return std::exp2(h / std::log(2.0));
  return h;
}

inline std::vector<double> token_entropies(const SentenceTokenRun& run, EntropyOptions options) {
  check_run(run);
  std::vector<double> out;
  out.reserve(run.tokens.size());
  for (const auto& t : run.tokens) {
    if (!t.topk || t.topk->empty()) throw Error(ErrorKind::Precondition, "token '" + t.token + "' has no top-k list");
    out.push_back(entropy(*t.topk, options));
  }
  return out;
}

inline double avg_entropy(const SentenceTokenRun& run, EntropyOptions options = {}) {
  const auto h = token_entropies(run, options);
  double sum = 0.0;
  for (double v : h) sum += v;
  return sum / static_cast<double>(h.size());
}

inline double max_entropy(const SentenceTokenRun& run, EntropyOptions options = {}) {
  const auto h = token_entropies(run, options);
  return *std::max_element(h.begin(), h.end());
}

// Character span [begin, end) of each sentence inside the response. Each
// sentence is located after the previous one; whitespace between sentences
// belongs to the following sentence.
inline std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(const Passage& passage) {
  const auto& text = passage.response();
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t cursor = 0;
  for (const auto& s : passage.sentences()) {
    const auto found = text.find(s, cursor);
    if (found == std::string::npos) {
      throw Error(ErrorKind::Validation, "sentence not found verbatim in response: '" + s + "'");
    }
    spans.emplace_back(found, found + s.size());
    cursor = found + s.size();
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    spans[i].first = i == 0 ? 0 : spans[i - 1].second;
  }
  spans.back().second = text.size();
  return spans;
}

// Assigns each token to the sentence whose span contains the token's start
// offset. A token crossing a boundary therefore stays with the earlier
// sentence. Tokens are assumed to tile the response in order.
inline std::vector<SentenceTokenRun> align_tokens(const Passage& passage, const std::vector<TokenScore>& tokens) {
  const auto spans = sentence_spans(passage);
  std::vector<SentenceTokenRun> runs(spans.size());
  for (std::size_t i = 0; i < runs.size(); ++i) runs[i].sentence_index = i;
  std::size_t offset = 0;
  std::size_t sentence = 0;
  for (const auto& t : tokens) {
    while (sentence + 1 < spans.size() && offset >= spans[sentence].second) ++sentence;
    runs[sentence].tokens.push_back(t);
    offset += t.token.size();
  }
  for (const auto& r : runs) {
    if (r.tokens.empty()) {
      throw Error(ErrorKind::Validation, "sentence " + std::to_string(r.sentence_index) + " received no tokens");
    }
  }
  return runs;
}

// Token runs for every sentence of the passage, scored by `scorer` with
// `context` as the conditioning prompt.
inline std::vector<SentenceTokenRun> score_passage(TokenScorer& scorer, const Passage& passage,
                                                   const std::string& context) {
  return align_tokens(passage, scorer.score_tokens(passage.response(), context));
}

}  // namespace selfcheck::greybox
