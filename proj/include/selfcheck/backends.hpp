#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "selfcheck/error.hpp"

namespace selfcheck {

struct TopToken {
  std::string token;
  double prob = 0.0;
  friend bool operator==(const TopToken&, const TopToken&) = default;
};

// Natural-log probability of one generated token, with the optional top-k
// alternatives reported by the model.
struct TokenScore {
  std::string token;
  double logprob = 0.0;
  std::optional<std::vector<TopToken>> topk;
  friend bool operator==(const TokenScore&, const TokenScore&) = default;
};

inline void validate_token_score(const TokenScore& t) {
  if (!std::isfinite(t.logprob) || t.logprob > 0.0) {
    throw Error(ErrorKind::Backend, "token '" + t.token + "' has invalid logprob");
  }
  if (!t.topk) return;
  if (t.topk->size() > 5) throw Error(ErrorKind::Backend, "top-k list longer than 5");
  double sum = 0.0;
  for (std::size_t i = 0; i < t.topk->size(); ++i) {
    const double p = (*t.topk)[i].prob;
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::Backend, "top-k probability outside (0,1]");
    if (i > 0 && p > (*t.topk)[i - 1].prob) throw Error(ErrorKind::Backend, "top-k list not sorted descending");
    sum += p;
  }
  if (sum > 1.0 + 1e-6) throw Error(ErrorKind::Backend, "top-k probabilities sum above 1");
}

// One multiple-choice question generated from a response sentence.
struct QaItem {
  std::string question;
  std::vector<std::string> options;
  std::size_t gold_index = 0;
  friend bool operator==(const QaItem&, const QaItem&) = default;
};

inline void validate_qa_item(const QaItem& item) {
  if (item.options.size() != 4) throw Error(ErrorKind::Backend, "question must have exactly 4 options");
  if (item.gold_index >= 4) throw Error(ErrorKind::Backend, "gold index out of range");
  std::set<std::string> distinct(item.options.begin(), item.options.end());
  if (distinct.size() != 4) throw Error(ErrorKind::Backend, "question options are not distinct");
}

struct QaAnswer {
  std::size_t index = 0;
  double answerability = 0.0;
  friend bool operator==(const QaAnswer&, const QaAnswer&) = default;
};

struct QaGeneration {
  std::vector<QaItem> items;
  std::size_t failures = 0;
};

struct NliLogits {
  double entail = 0.0;
  double contradict = 0.0;
  friend bool operator==(const NliLogits&, const NliLogits&) = default;
};

enum class Verdict { Yes, No, NA };

struct JudgeVerdict {
  Verdict verdict = Verdict::NA;
  std::string raw;
};

inline constexpr double verdict_value(Verdict v) {
  switch (v) {
    case Verdict::Yes: return 0.0;
    case Verdict::No: return 1.0;
    case Verdict::NA: return 0.5;
  }
  return 0.5;
}

// Leading word "yes" -> Yes, "no" -> No, anything else -> NA.
inline Verdict normalize_verdict(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && !std::isalnum(static_cast<unsigned char>(raw[i]))) ++i;
  std::string word;
  while (i < raw.size() && std::isalnum(static_cast<unsigned char>(raw[i]))) {
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
    ++i;
  }
  if (word == "yes") return Verdict::Yes;
  if (word == "no") return Verdict::No;
  return Verdict::NA;
}

inline std::string judge_prompt(std::string_view context, std::string_view sentence) {
  std::string p;
  p.reserve(context.size() + sentence.size() + 96);
  p += "Context: ";
  p += context;
  p += "\nSentence: ";
  p += sentence;
  p += "\nIs the sentence supported by the context above? \nAnswer Yes or No:";
  return p;
}

inline std::string passage_prompt(std::string_view concept_name) {
  return "This is a Wikipedia passage about " + std::string(concept_name) + ":";
}

// ---------------------------------------------------------------------------
// Capability contracts. Each public method checks preconditions and output
// invariants, then delegates to the do_* hook implemented by a backend.

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string id() const = 0;

  std::vector<std::string> generate(const std::string& prompt, double temperature, std::size_t n) {
    require(temperature >= 0.0, "generate: temperature must be >= 0");
    require(n >= 1, "generate: n must be >= 1");
    auto out = do_generate(prompt, temperature, n);
    if (out.size() != n) {
      throw Error(ErrorKind::Backend, "generate: backend returned " + std::to_string(out.size()) +
                                          " completions, expected " + std::to_string(n));
    }
    return out;
  }

 protected:
  virtual std::vector<std::string> do_generate(const std::string& prompt, double temperature, std::size_t n) = 0;
};

class TokenScorer {
 public:
  virtual ~TokenScorer() = default;
  virtual std::string id() const = 0;

  // Scores `text` conditioned on `context`; one entry per backend token.
  std::vector<TokenScore> score_tokens(const std::string& text, const std::string& context) {
    require(!text.empty(), "score_tokens: text must be non-empty");
    auto out = do_score_tokens(text, context);
    std::string joined;
    for (const auto& t : out) {
      validate_token_score(t);
      joined += t.token;
    }
    if (joined != text) throw Error(ErrorKind::Backend, "score_tokens: tokens do not reassemble the text");
    return out;
  }

 protected:
  virtual std::vector<TokenScore> do_score_tokens(const std::string& text, const std::string& context) = 0;
};

class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual std::string id() const = 0;

  // Clipped to [0, 1].
  double similarity(const std::string& candidate, const std::string& reference) {
    require(!candidate.empty() && !reference.empty(), "similarity: inputs must be non-empty");
    const double raw = do_similarity(candidate, reference);
    if (!std::isfinite(raw)) throw Error(ErrorKind::Backend, "similarity: non-finite value");
    return std::clamp(raw, 0.0, 1.0);
  }

 protected:
  virtual double do_similarity(const std::string& candidate, const std::string& reference) = 0;
};

class NliScorer {
 public:
  virtual ~NliScorer() = default;
  virtual std::string id() const = 0;

  NliLogits nli(const std::string& premise, const std::string& hypothesis) {
    require(!premise.empty() && !hypothesis.empty(), "nli: inputs must be non-empty");
    const auto out = do_nli(premise, hypothesis);
    if (!std::isfinite(out.entail) || !std::isfinite(out.contradict)) {
      throw Error(ErrorKind::Backend, "nli: non-finite logits");
    }
    return out;
  }

 protected:
  virtual NliLogits do_nli(const std::string& premise, const std::string& hypothesis) = 0;
};

class QaBackend {
 public:
  virtual ~QaBackend() = default;
  virtual std::string id() const = 0;

  // Invalid items are dropped and counted in `failures`.
  QaGeneration qa_generate(const std::string& sentence, const std::string& passage, std::size_t n_questions) {
    require(n_questions >= 1, "qa_generate: n_questions must be >= 1");
    auto raw = do_qa_generate(sentence, passage, n_questions);
    QaGeneration out;
    out.failures = raw.failures;
    for (auto& item : raw.items) {
      try {
        validate_qa_item(item);
        out.items.push_back(std::move(item));
      } catch (const Error&) {
        ++out.failures;
      }
    }
    return out;
  }

  QaAnswer qa_answer(const QaItem& item, const std::string& context) {
    validate_qa_item(item);
    const auto out = do_qa_answer(item, context);
    if (out.index >= item.options.size()) throw Error(ErrorKind::Backend, "qa_answer: index out of range");
    if (!(out.answerability >= 0.0 && out.answerability <= 1.0)) {
      throw Error(ErrorKind::Backend, "qa_answer: answerability outside [0,1]");
    }
    return out;
  }

 protected:
  virtual QaGeneration do_qa_generate(const std::string& sentence, const std::string& passage,
                                      std::size_t n_questions) = 0;
  virtual QaAnswer do_qa_answer(const QaItem& item, const std::string& context) = 0;
};

// Asks a text generator whether `sentence` is supported by `context`.
class Judge {
 public:
  explicit Judge(Generator& generator) : generator_(&generator) {}

  JudgeVerdict judge(const std::string& context, const std::string& sentence) const {
    require(!context.empty() && !sentence.empty(), "judge: inputs must be non-empty");
    auto out = generator_->generate(judge_prompt(context, sentence), 0.0, 1);
    JudgeVerdict v;
    v.raw = std::move(out.front());
    v.verdict = normalize_verdict(v.raw);
    return v;
  }

  std::string id() const { return generator_->id(); }

 private:
  Generator* generator_;
};

}  // namespace selfcheck
