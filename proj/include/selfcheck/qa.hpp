#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "selfcheck/backends.hpp"
#include "selfcheck/core.hpp"
#include "selfcheck/error.hpp"

namespace selfcheck::qa {

// Per-answer likelihoods of the match/mismatch observation model:
// beta1 = P(mismatch | non-factual), beta2 = P(match | factual).
struct BayesParams {
  double beta1 = 0.8;
  double beta2 = 0.8;

  void validate() const {
    require(beta1 > 0.0 && beta1 < 1.0, "beta1 must be in (0,1)");
    require(beta2 > 0.0 && beta2 < 1.0, "beta2 must be in (0,1)");
  }
  double gamma1() const { return beta2 / (1.0 - beta1); }
  double gamma2() const { return beta1 / (1.0 - beta2); }
};

struct SampleAnswer {
  std::size_t sample_index = 0;
  double answerability = 0.0;
};

// Evidence for one question: each sample's answer either matched the answer
// obtained on the response or did not.
struct QaEvidence {
  QaItem item;
  std::size_t response_answer = 0;
  double response_answerability = 1.0;
  std::vector<SampleAnswer> matches;
  std::vector<SampleAnswer> mismatches;

  double soft_matches() const { return weight(matches); }
  double soft_mismatches() const { return weight(mismatches); }

  // Keeps only samples with index < n.
  QaEvidence prefix(std::size_t n) const {
    QaEvidence out{item, response_answer, response_answerability, {}, {}};
    for (const auto& m : matches)
      if (m.sample_index < n) out.matches.push_back(m);
    for (const auto& m : mismatches)
      if (m.sample_index < n) out.mismatches.push_back(m);
    return out;
  }

 private:
  static double weight(const std::vector<SampleAnswer>& v) {
    double s = 0.0;
    for (const auto& a : v) s += a.answerability;
    return s;
  }
};

enum class Counting {
  Soft,  // weight each sample by its answerability
  Hard,  // weight 1 if answerability > threshold, else 0
};

struct QaOptions {
  std::size_t n_questions = 5;
  BayesParams bayes;
  Counting counting = Counting::Soft;
  double answerability_threshold = 0.5;
  // When set, questions whose answerability on the response itself falls
  // below this value are dropped.
  std::optional<double> response_answerability_floor;
};

// P(non-factual | counts) = g2^Nn / (g1^Nm + g2^Nn), evaluated in log space.
inline double bayes_score(double n_match, double n_mismatch, const BayesParams& params) {
  params.validate();
  require(n_match >= 0.0 && n_mismatch >= 0.0, "match counts must be non-negative");
  const double a = n_mismatch * std::log(params.gamma2());
  const double b = n_match * std::log(params.gamma1());
  // a - log(e^a + e^b) = -log(1 + e^(b - a))
  return 1.0 / (1.0 + std::exp(b - a));
}

inline double effective_weight(double answerability, const QaOptions& options) {
  if (options.counting == Counting::Soft) return answerability;
  return answerability > options.answerability_threshold ? 1.0 : 0.0;
}

inline double bayes_score(const QaEvidence& ev, const QaOptions& options) {
  double nm = 0.0, nn = 0.0;
  for (const auto& m : ev.matches) nm += effective_weight(m.answerability, options);
  for (const auto& m : ev.mismatches) nn += effective_weight(m.answerability, options);
  return bayes_score(nm, nn, options.bayes);
}

// Mean over questions. Returns nullopt when no question survived, so the
// caller can record the sentence as unscored rather than as zero.
inline std::optional<double> qa_sentence_score(const std::vector<double>& question_scores) {
  if (question_scores.empty()) return std::nullopt;
  double sum = 0.0;
  for (double s : question_scores) sum += s;
  return sum / static_cast<double>(question_scores.size());
}

struct SentenceEvidence {
  std::vector<QaEvidence> questions;
  std::size_t generation_failures = 0;
  std::size_t dropped_unanswerable = 0;
};

// Generates questions on `sentence`, answers each on the response and on
// every evidence item, and sorts the evidence items into matches/mismatches.
inline SentenceEvidence collect_evidence(QaBackend& backend, const std::string& sentence, const Passage& passage,
                                         const EvidenceSet& evidence, const QaOptions& options) {
  auto generated = backend.qa_generate(sentence, passage.response(), options.n_questions);
  SentenceEvidence out;
  out.generation_failures = generated.failures;
  for (auto& item : generated.items) {
    const auto on_response = backend.qa_answer(item, passage.response());
    if (options.response_answerability_floor && on_response.answerability < *options.response_answerability_floor) {
      ++out.dropped_unanswerable;
      continue;
    }
    QaEvidence ev{item, on_response.index, on_response.answerability, {}, {}};
    for (std::size_t n = 0; n < evidence.size(); ++n) {
      const auto a = backend.qa_answer(item, evidence.items()[n].text);
      (a.index == on_response.index ? ev.matches : ev.mismatches).push_back({n, a.answerability});
    }
    out.questions.push_back(std::move(ev));
  }
  if (out.questions.empty() && out.generation_failures > 0 && out.dropped_unanswerable == 0) {
    throw Error(ErrorKind::Backend, "no-questions: every question failed generation for sentence '" + sentence + "'");
  }
  return out;
}

inline std::optional<double> score_sentence(const SentenceEvidence& ev, const QaOptions& options) {
  std::vector<double> scores;
  for (const auto& q : ev.questions) scores.push_back(bayes_score(q, options));
  return qa_sentence_score(scores);
}

}  // namespace selfcheck::qa
