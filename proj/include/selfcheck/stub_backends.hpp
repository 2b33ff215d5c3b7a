#pragma once

// Deterministic reference backends. Each one is a documented closed-form
// function of its inputs so that scorer tests have exact oracles.

#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "selfcheck/backends.hpp"
#include "selfcheck/hash.hpp"
#include "selfcheck/tokenize.hpp"

namespace selfcheck {

namespace stub {

inline const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {"a",  "an", "the", "of",  "in", "on",  "at",  "to",  "and", "or",
                                              "is", "was", "are", "were", "be", "by", "for", "with", "as", "it"};
  return words;
}

inline std::vector<std::string> content_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : word_tokens(text))
    if (!stopwords().count(t)) out.push_back(std::move(t));
  return out;
}

// Fraction of the distinct content tokens of `part` that occur in `whole`.
inline double coverage(std::string_view part, std::string_view whole) {
  const auto p = content_tokens(part);
  const std::set<std::string> distinct(p.begin(), p.end());
  if (distinct.empty()) return 0.0;
  const auto w = word_tokens(whole);
  const std::set<std::string> pool(w.begin(), w.end());
  std::size_t hit = 0;
  for (const auto& t : distinct) hit += pool.count(t);
  return static_cast<double>(hit) / static_cast<double>(distinct.size());
}

// Pronounceable pseudo-word for index i.
inline std::string pseudo_word(std::uint64_t i) {
  static constexpr const char* syllables[] = {"ka", "lo", "mi", "ne", "pu", "ra", "si", "to", "vu", "de",
                                              "go", "ha", "ji", "be", "fo", "ze"};
  std::string w;
  do {
    w += syllables[i % 16];
    i /= 16;
  } while (i > 0);
  if (w.size() < 4) w += "n";
  return w;
}

}  // namespace stub

// Passage generator plus judge. A judge prompt is answered "Yes" when at
// least half of the sentence's content tokens occur in the context, "No" when
// none do, and with an unparseable reply otherwise. Any other prompt yields a
// passage of `n_sentences` pseudo-word sentences; at temperature t > 0 each
// sentence repeats the greedy one with probability 1/(1+t).
class StubGenerator : public Generator {
 public:
  explicit StubGenerator(std::uint64_t seed = 0, std::size_t n_sentences = 4, std::size_t words_per_sentence = 7)
      : seed_(seed), n_sentences_(n_sentences), words_(words_per_sentence) {}

  // The seed changes every output, so it is part of the identity (and of
  // the cache key).
  std::string id() const override { return "stub-generator-" + std::to_string(seed_); }
  std::size_t calls() const { return calls_.load(); }

 protected:
  std::vector<std::string> do_generate(const std::string& prompt, double temperature, std::size_t n) override {
    ++calls_;
    std::vector<std::string> out;
    out.reserve(n);
    if (auto verdict = judge_reply(prompt)) {
      out.assign(n, *verdict);
      return out;
    }
    const auto greedy = sentences_for(fnv1a(prompt, seed_ ^ 0x5eedULL));
    for (std::size_t i = 0; i < n; ++i) {
      if (temperature == 0.0) {
        out.push_back(join(greedy));
        continue;
      }
      Rng rng(fnv1a(prompt + "|" + std::to_string(temperature) + "|" + std::to_string(i), seed_));
      const double keep = 1.0 / (1.0 + temperature);
      std::vector<std::string> sentences;
      for (std::size_t s = 0; s < greedy.size(); ++s) {
        if (rng.bernoulli(keep)) {
          sentences.push_back(greedy[s]);
        } else {
          sentences.push_back(make_sentence(rng));
        }
      }
      out.push_back(join(sentences));
    }
    return out;
  }

 private:
  static std::optional<std::string> judge_reply(const std::string& prompt) {
    static const std::string head = "Context: ";
    static const std::string mid = "\nSentence: ";
    static const std::string tail = "\nIs the sentence supported by the context above? \nAnswer Yes or No:";
    if (prompt.rfind(head, 0) != 0 || prompt.size() < tail.size() ||
        prompt.compare(prompt.size() - tail.size(), tail.size(), tail) != 0) {
      return std::nullopt;
    }
    const auto split = prompt.rfind(mid);
    if (split == std::string::npos) return std::nullopt;
    const auto context = prompt.substr(head.size(), split - head.size());
    const auto sentence = prompt.substr(split + mid.size(), prompt.size() - tail.size() - split - mid.size());
    const double c = stub::coverage(sentence, context);
    if (c >= 0.5) return std::string("Yes");
    if (c == 0.0) return std::string("No");
    return std::string("Unsure");
  }

  std::string make_sentence(Rng& rng) const {
    std::string s;
    for (std::size_t w = 0; w < words_; ++w) {
      if (w) s += ' ';
      s += stub::pseudo_word(rng.below(4096));
    }
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s + ".";
  }

  std::vector<std::string> sentences_for(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<std::string> out;
    for (std::size_t s = 0; s < n_sentences_; ++s) out.push_back(make_sentence(rng));
    return out;
  }

  static std::string join(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
      if (!out.empty()) out += ' ';
      out += s;
    }
    return out;
  }

  std::uint64_t seed_;
  std::size_t n_sentences_;
  std::size_t words_;
  std::atomic<std::size_t> calls_{0};
};

// Uniform distribution over a vocabulary of `vocab_size` entries: every
// token gets logprob ln(1/V) and the top-k list holds min(k, V) entries of
// probability 1/V. Tokens are whitespace-prefixed words.
class StubTokenScorer : public TokenScorer {
 public:
  explicit StubTokenScorer(std::size_t vocab_size = 10, std::size_t k = 5, std::string name = "stub-token-scorer")
      : vocab_(vocab_size), k_(k), name_(std::move(name)) {
    require(vocab_size >= 1, "StubTokenScorer: vocabulary must be non-empty");
    require(k <= 5, "StubTokenScorer: k must be <= 5");
  }

  std::string id() const override { return name_; }
  std::size_t calls() const { return calls_.load(); }

 protected:
  std::vector<TokenScore> do_score_tokens(const std::string& text, const std::string&) override {
    ++calls_;
    std::vector<TokenScore> out;
    const double p = 1.0 / static_cast<double>(vocab_);
    std::vector<TopToken> topk;
    for (std::size_t i = 0; i < std::min(k_, vocab_); ++i) topk.push_back({"v" + std::to_string(i), p});
    std::size_t start = 0;
    for (std::size_t i = 1; i <= text.size(); ++i) {
      const bool boundary = i == text.size() || (std::isspace(static_cast<unsigned char>(text[i])) &&
                                                 !std::isspace(static_cast<unsigned char>(text[i - 1])));
      if (boundary) {
        out.push_back({text.substr(start, i - start), std::log(p), topk});
        start = i;
      }
    }
    return out;
  }

 private:
  std::size_t vocab_;
  std::size_t k_;
  std::string name_;
  std::atomic<std::size_t> calls_{0};
};

// F1 of word-token multisets (BERTScore stand-in).
class StubSimilarity : public SimilarityScorer {
 public:
  std::string id() const override { return "stub-similarity"; }
  std::size_t calls() const { return calls_.load(); }

 protected:
  double do_similarity(const std::string& candidate, const std::string& reference) override {
    ++calls_;
    std::map<std::string, int> c, r;
    for (auto& t : word_tokens(candidate)) ++c[t];
    for (auto& t : word_tokens(reference)) ++r[t];
    int nc = 0, nr = 0, common = 0;
    for (auto& [t, k] : c) {
      nc += k;
      auto it = r.find(t);
      if (it != r.end()) common += std::min(k, it->second);
    }
    for (auto& [t, k] : r) nr += k;
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / nc;
    const double recall = static_cast<double>(common) / nr;
    return 2.0 * precision * recall / (precision + recall);
  }

 private:
  std::atomic<std::size_t> calls_{0};
};

// z_e = -5 + 10c, z_c = 5 - 10c where c is the share of the hypothesis's
// content tokens found in the premise.
class StubNli : public NliScorer {
 public:
  std::string id() const override { return "stub-nli"; }
  std::size_t calls() const { return calls_.load(); }

 protected:
  NliLogits do_nli(const std::string& premise, const std::string& hypothesis) override {
    ++calls_;
    const double c = stub::coverage(hypothesis, premise);
    return {-5.0 + 10.0 * c, 5.0 - 10.0 * c};
  }

 private:
  std::atomic<std::size_t> calls_{0};
};

// Question k asks for the k-th content token of the sentence; the three
// distractors are suffixed variants of it. The answerer picks the option
// whose tokens overlap the context most (ties to the lowest index) and
// reports that overlap fraction as answerability.
class StubQa : public QaBackend {
 public:
  std::string id() const override { return "stub-qa"; }
  std::size_t calls() const { return calls_.load(); }

 protected:
  QaGeneration do_qa_generate(const std::string& sentence, const std::string&, std::size_t n_questions) override {
    ++calls_;
    QaGeneration out;
    std::vector<std::string> targets;
    for (auto& t : stub::content_tokens(sentence))
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    if (targets.empty()) {
      out.failures = n_questions;
      return out;
    }
    for (std::size_t q = 0; q < n_questions; ++q) {
      const auto& gold = targets[q % targets.size()];
      QaItem item;
      item.question = "Which word completes the statement: " + sentence + " (" + std::to_string(q) + ")";
      item.gold_index = fnv1a(gold) % 4;
      for (std::size_t k = 0, d = 1; k < 4; ++k) {
        item.options.push_back(k == item.gold_index ? gold : gold + "qz" + std::to_string(d++));
      }
      out.items.push_back(std::move(item));
    }
    return out;
  }

  QaAnswer do_qa_answer(const QaItem& item, const std::string& context) override {
    ++calls_;
    QaAnswer best;
    double best_overlap = -1.0;
    const auto ctx = word_tokens(context);
    const std::set<std::string> pool(ctx.begin(), ctx.end());
    for (std::size_t k = 0; k < item.options.size(); ++k) {
      const auto toks = word_tokens(item.options[k]);
      double overlap = 0.0;
      if (!toks.empty()) {
        std::size_t hit = 0;
        for (const auto& t : toks) hit += pool.count(t);
        overlap = static_cast<double>(hit) / static_cast<double>(toks.size());
      }
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best = {k, overlap};
      }
    }
    return best;
  }

 private:
  std::atomic<std::size_t> calls_{0};
};

}  // namespace selfcheck
