#pragma once

// Reference implementations used only by tests. They are written from the
// definitions, favouring obviousness over speed, and share no code with the
// library.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

// Posterior of "non-factual" after observing a list of answer outcomes
// (true = sample answer matched the response's answer), with equal priors.
inline double bayes_posterior(int n_match, int n_mismatch, double beta1, double beta2) {
  std::vector<bool> outcomes;
  for (int i = 0; i < n_match; ++i) outcomes.push_back(true);
  for (int i = 0; i < n_mismatch; ++i) outcomes.push_back(false);
  const double prior_false = 0.5, prior_true = 0.5;
  double like_false = 1.0, like_true = 1.0;
  for (bool matched : outcomes) {
    // Non-factual sentence: a sample agrees with probability 1 - beta1.
    like_false *= matched ? (1.0 - beta1) : beta1;
    // Factual sentence: a sample agrees with probability beta2.
    like_true *= matched ? beta2 : (1.0 - beta2);
  }
  return like_false * prior_false / (like_false * prior_false + like_true * prior_true);
}

// Average precision as the mean, over positives, of the precision among all
// items scoring at least as high as that positive.
inline double average_precision(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double total = 0.0;
  int n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    ++n_pos;
    int selected = 0, hits = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] >= scores[i]) {
        ++selected;
        hits += positive[j] ? 1 : 0;
      }
    }
    total += static_cast<double>(hits) / selected;
  }
  return total / n_pos;
}

inline double cohens_kappa(const std::vector<int>& a, const std::vector<int>& b, int classes) {
  std::vector<std::vector<double>> m(classes, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) m[a[i]][b[i]] += 1.0;
  const double n = static_cast<double>(a.size());
  double agree = 0.0, chance = 0.0;
  for (int k = 0; k < classes; ++k) {
    agree += m[k][k];
    double row = 0.0, col = 0.0;
    for (int j = 0; j < classes; ++j) {
      row += m[k][j];
      col += m[j][k];
    }
    chance += (row / n) * (col / n);
  }
  agree /= n;
  return (agree - chance) / (1.0 - chance);
}

// Spearman without ties: 1 - 6 sum d^2 / (n (n^2 - 1)).
inline double spearman_no_ties(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      int below = 0;
      for (double w : v) below += w < v[i] ? 1 : 0;
      r[i] = below + 1;
    }
    return r;
  };
  const auto rx = ranks(xs), ry = ranks(ys);
  double d2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(xs.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// Additively smoothed unigram probability from raw token lists.
inline std::map<std::string, double> unigram(const std::vector<std::vector<std::string>>& corpus, double delta) {
  std::map<std::string, double> counts;
  double total = 0.0;
  for (const auto& doc : corpus)
    for (const auto& t : doc) {
      counts[t] += 1.0;
      total += 1.0;
    }
  const double v = static_cast<double>(counts.size());
  std::map<std::string, double> p;
  for (const auto& [t, c] : counts) p[t] = (c + delta) / (total + delta * v);
  return p;
}

}  // namespace oracle
