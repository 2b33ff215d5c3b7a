#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "selfcheck/core.hpp"
#include "selfcheck/error.hpp"

namespace selfcheck::eval {

enum class Task { NonFact, NonFactStar, Factual };

inline constexpr Task kAllTasks[] = {Task::NonFact, Task::NonFactStar, Task::Factual};

inline constexpr const char* task_name(Task t) {
  switch (t) {
    case Task::NonFact: return "nonfact";
    case Task::NonFactStar: return "nonfact_star";
    case Task::Factual: return "factual";
  }
  return "nonfact";
}

inline bool is_positive(Task task, SentenceLabel label) {
  switch (task) {
    case Task::NonFact: return label != SentenceLabel::Accurate;
    case Task::NonFactStar: return label == SentenceLabel::MajorInaccurate;
    case Task::Factual: return label == SentenceLabel::Accurate;
  }
  return false;
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrResult {
  double average_precision = 0.0;
  std::vector<PrPoint> curve;  // one point per distinct score, descending threshold
};

// Step-wise average precision: sum over thresholds of (R_k - R_{k-1}) * P_k,
// where all items sharing a score enter at the same threshold.
inline PrResult average_precision(const std::vector<double>& scores, const std::vector<bool>& positives) {
  require(scores.size() == positives.size(), "average_precision: length mismatch");
  const auto n_pos = static_cast<std::size_t>(std::count(positives.begin(), positives.end(), true));
  if (n_pos == 0 || n_pos == positives.size()) {
    throw Error(ErrorKind::Degenerate, "average_precision needs at least one positive and one negative");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  PrResult out;
  std::size_t tp = 0, seen = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += positives[order[j]] ? 1 : 0;
      ++j;
    }
    seen += j - i;
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    out.average_precision += (recall - prev_recall) * precision;
    out.curve.push_back({recall, precision});
    prev_recall = recall;
    i = j;
  }
  return out;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), "pearson: length mismatch");
  require(xs.size() >= 2, "pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::Degenerate, "correlation of a zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), "spearman: length mismatch");
  return pearson(average_ranks(xs), average_ranks(ys));
}

// Cohen's kappa between two annotators. With two classes, minor and major
// inaccuracies are merged into one label first.
inline double cohens_kappa(const std::vector<SentenceLabel>& a, const std::vector<SentenceLabel>& b, int classes) {
  require(a.size() == b.size() && !a.empty(), "cohens_kappa: need equal, non-empty label lists");
  require(classes == 2 || classes == 3, "cohens_kappa: classes must be 2 or 3");
  auto cls = [&](SentenceLabel l) {
    const int c = static_cast<int>(l);
    return classes == 2 ? std::min(c, 1) : c;
  };
  std::vector<double> pa(3, 0.0), pb(3, 0.0);
  double agree = 0.0;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[static_cast<std::size_t>(cls(a[i]))] += 1.0 / n;
    pb[static_cast<std::size_t>(cls(b[i]))] += 1.0 / n;
    if (cls(a[i]) == cls(b[i])) agree += 1.0;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (std::size_t c = 0; c < 3; ++c) pe += pa[c] * pb[c];
  if (std::abs(1.0 - pe) < 1e-15) throw Error(ErrorKind::Degenerate, "cohens_kappa undefined: chance agreement is 1");
  return (po - pe) / (1.0 - pe);
}

// How a method's sentence scores become a passage score.
enum class Aggregation {
  SentenceMean,  // mean of sentence scores (also used by Max grey-box metrics)
  TokenMean,     // mean over every token of the passage (Avg grey-box metrics)
};

// `token_counts` is required for TokenMean: sentence i averaged over
// token_counts[i] tokens, so weighting by it recovers the token-level mean.
inline double passage_score(const std::vector<double>& sentence_scores, Aggregation aggregation,
                            const std::vector<std::size_t>& token_counts = {}) {
  require(!sentence_scores.empty(), "passage_score: no sentence scores");
  if (aggregation == Aggregation::SentenceMean) return mean_passage_score(sentence_scores).value;
  require(token_counts.size() == sentence_scores.size(), "passage_score: token counts missing");
  double weighted = 0.0, total = 0.0;
  for (std::size_t i = 0; i < sentence_scores.size(); ++i) {
    weighted += sentence_scores[i] * static_cast<double>(token_counts[i]);
    total += static_cast<double>(token_counts[i]);
  }
  require(total > 0.0, "passage_score: zero tokens");
  return weighted / total;
}

// ---- report ------------------------------------------------------------------

struct TaskResult {
  std::optional<PrResult> pr;  // nullopt when the class split is degenerate
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct PassageResult {
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::size_t passages = 0;
};

struct LabelCounts {
  std::size_t passages = 0;
  std::size_t sentences = 0;
  std::size_t accurate = 0;
  std::size_t minor_inaccurate = 0;
  std::size_t major_inaccurate = 0;
  std::size_t nonfact_star_passages = 0;
  std::size_t nonfact_star_sentences = 0;
  std::size_t missing_scores = 0;
};

struct MethodReport {
  std::map<Task, TaskResult> tasks;
  PassageResult passage;
  LabelCounts counts;
};

// Scores of one passage for one method. Missing entries are sentences the
// method could not score.
struct ScoredPassage {
  const Passage* passage = nullptr;
  std::vector<std::optional<double>> scores;
  std::vector<std::size_t> token_counts;  // only for TokenMean
};

inline LabelCounts count_labels(const std::vector<ScoredPassage>& data) {
  LabelCounts c;
  for (const auto& sp : data) {
    const auto& labels = *sp.passage->labels();
    ++c.passages;
    c.sentences += labels.size();
    for (auto l : labels) {
      if (l == SentenceLabel::Accurate) ++c.accurate;
      if (l == SentenceLabel::MinorInaccurate) ++c.minor_inaccurate;
      if (l == SentenceLabel::MajorInaccurate) ++c.major_inaccurate;
    }
    if (!sp.passage->is_total_hallucination()) {
      ++c.nonfact_star_passages;
      c.nonfact_star_sentences += labels.size();
    }
    for (const auto& s : sp.scores) c.missing_scores += s ? 0 : 1;
  }
  return c;
}

// (score, positive) pairs for a task. Factual detection ranks by the negated
// hallucination score.
inline std::pair<std::vector<double>, std::vector<bool>> task_instances(const std::vector<ScoredPassage>& data,
                                                                        Task task) {
  std::vector<double> scores;
  std::vector<bool> positives;
  for (const auto& sp : data) {
    if (!sp.passage->has_labels()) throw Error(ErrorKind::Validation, "evaluation requires labels");
    if (task == Task::NonFactStar && sp.passage->is_total_hallucination()) continue;
    const auto& labels = *sp.passage->labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!sp.scores[i]) continue;
      scores.push_back(task == Task::Factual ? -*sp.scores[i] : *sp.scores[i]);
      positives.push_back(is_positive(task, labels[i]));
    }
  }
  return {std::move(scores), std::move(positives)};
}

inline MethodReport evaluate(const std::vector<ScoredPassage>& data, Aggregation aggregation) {
  MethodReport report;
  for (const auto& sp : data) {
    if (!sp.passage->has_labels()) {
      throw Error(ErrorKind::Validation, "passage '" + sp.passage->concept_name() + "' has no labels");
    }
    require(sp.scores.size() == sp.passage->size(), "score count does not match sentence count");
  }
  report.counts = count_labels(data);
  for (Task task : kAllTasks) {
    auto [scores, positives] = task_instances(data, task);
    TaskResult r;
    r.positives = static_cast<std::size_t>(std::count(positives.begin(), positives.end(), true));
    r.negatives = positives.size() - r.positives;
    try {
      r.pr = average_precision(scores, positives);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
    }
    report.tasks[task] = std::move(r);
  }
  std::vector<double> method, gold;
  for (const auto& sp : data) {
    std::vector<double> present;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < sp.scores.size(); ++i) {
      if (!sp.scores[i]) continue;
      present.push_back(*sp.scores[i]);
      if (aggregation == Aggregation::TokenMean) counts.push_back(sp.token_counts.at(i));
    }
    if (present.empty()) continue;
    method.push_back(passage_score(present, aggregation, counts));
    gold.push_back(sp.passage->gold_score());
  }
  report.passage.passages = method.size();
  try {
    report.passage.pearson = pearson(method, gold);
    report.passage.spearman = spearman(method, gold);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate && e.kind() != ErrorKind::Precondition) throw;
  }
  return report;
}

}  // namespace selfcheck::eval
