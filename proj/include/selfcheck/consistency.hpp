#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "selfcheck/backends.hpp"
#include "selfcheck/core.hpp"
#include "selfcheck/error.hpp"

namespace selfcheck::consistency {

// ---- similarity ------------------------------------------------------------

// Best similarity between `sentence` and any sentence of each evidence item.
inline std::vector<double> max_similarities(SimilarityScorer& scorer, const std::string& sentence,
                                            const EvidenceSet& evidence) {
  std::vector<double> out;
  out.reserve(evidence.size());
  for (std::size_t n = 0; n < evidence.size(); ++n) {
    const auto& item = evidence.items()[n];
    if (item.sentences.empty()) {
      throw Error(ErrorKind::Validation, "evidence item " + std::to_string(n) + " has no sentences");
    }
    double best = 0.0;
    for (const auto& s : item.sentences) best = std::max(best, scorer.similarity(sentence, s));
    out.push_back(best);
  }
  return out;
}

// 1 - mean over samples of the per-sample maximum similarity.
inline double bertsim_from_maxima(const std::vector<double>& maxima) {
  require(!maxima.empty(), "bertsim: no evidence");
  double sum = 0.0;
  for (double m : maxima) sum += m;
  return std::clamp(1.0 - sum / static_cast<double>(maxima.size()), 0.0, 1.0);
}

inline double bertsim_score(SimilarityScorer& scorer, const std::string& sentence, const EvidenceSet& evidence) {
  return bertsim_from_maxima(max_similarities(scorer, sentence, evidence));
}

// ---- NLI -------------------------------------------------------------------

// Softmax over the entailment and contradiction logits only.
inline double contradiction_prob(const NliLogits& z) {
  return 1.0 / (1.0 + std::exp(z.entail - z.contradict));
}

inline std::vector<double> contradiction_probs(NliScorer& scorer, const std::string& sentence,
                                               const EvidenceSet& evidence) {
  std::vector<double> out;
  out.reserve(evidence.size());
  for (const auto& item : evidence.items()) out.push_back(contradiction_prob(scorer.nli(item.text, sentence)));
  return out;
}

inline double mean(const std::vector<double>& v) {
  require(!v.empty(), "mean of an empty list");
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

inline double nli_score(NliScorer& scorer, const std::string& sentence, const EvidenceSet& evidence) {
  return mean(contradiction_probs(scorer, sentence, evidence));
}

// ---- prompting -------------------------------------------------------------

struct PromptVerdictRow {
  std::size_t sentence_index = 0;
  std::vector<JudgeVerdict> verdicts;
  std::vector<double> mapped;
};

inline PromptVerdictRow judge_sentence(const Judge& judge, std::size_t sentence_index, const std::string& sentence,
                                       const EvidenceSet& evidence) {
  PromptVerdictRow row;
  row.sentence_index = sentence_index;
  for (const auto& item : evidence.items()) {
    auto v = judge.judge(item.text, sentence);
    row.mapped.push_back(verdict_value(v.verdict));
    row.verdicts.push_back(std::move(v));
  }
  return row;
}

inline double prompt_score_from_verdicts(const std::vector<Verdict>& verdicts) {
  require(!verdicts.empty(), "prompt score: no verdicts");
  double sum = 0.0;
  for (auto v : verdicts) sum += verdict_value(v);
  return sum / static_cast<double>(verdicts.size());
}

inline double prompt_score(const Judge& judge, const std::string& sentence, const EvidenceSet& evidence) {
  return mean(judge_sentence(judge, 0, sentence, evidence).mapped);
}

}  // namespace selfcheck::consistency
