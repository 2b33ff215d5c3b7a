#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "selfcheck/core.hpp"
#include "selfcheck/error.hpp"
#include "selfcheck/tokenize.hpp"

namespace selfcheck::ngram {

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

inline constexpr const char* kBegin = "<s>";
inline constexpr const char* kEnd = "</s>";

struct NgramOptions {
  int order = 1;
  double delta = 1e-9;
  Tokenizer tokenizer = [](std::string_view s) { return word_tokens(s); };
};

// Additively smoothed n-gram LM trained on the samples and the response
// itself. Including the response is what guarantees every response token a
// count of at least one. Orders >= 2 pad each sentence with begin markers,
// append an end marker, and back off to shorter contexts that were never
// observed.
class NgramModel {
 public:
  NgramModel(const EvidenceSet& evidence, const Passage& response, NgramOptions options = {})
      : options_(std::move(options)) {
    require(options_.order >= 1 && options_.order <= 5, "n-gram order must be in [1, 5]");
    require(options_.delta > 0.0, "n-gram delta must be > 0");
    tables_.resize(static_cast<std::size_t>(options_.order));
    for (const auto& item : evidence.items()) {
      if (options_.order == 1) {
        add_sequence(options_.tokenizer(item.text));
      } else {
        for (const auto& s : item.sentences) add_sequence(options_.tokenizer(s));
      }
    }
    for (const auto& s : response.sentences()) add_sequence(options_.tokenizer(s));
    if (tables_[0].totals[""] == 0) throw Error(ErrorKind::Precondition, "n-gram model: no training tokens");
  }

  int order() const { return options_.order; }
  double delta() const { return options_.delta; }
  const std::set<std::string>& vocab() const { return vocab_; }

  // Count of `token` after `context` (context length < order).
  std::size_t count(const std::vector<std::string>& context, const std::string& token) const {
    const auto k = context.size();
    if (k >= tables_.size()) return 0;
    const auto& table = tables_[k];
    const auto it = table.counts.find(join(context));
    if (it == table.counts.end()) return 0;
    const auto jt = it->second.find(token);
    return jt == it->second.end() ? 0 : jt->second;
  }

  // p(token | history), history being the preceding tokens (already padded
  // for order >= 2). Uses the longest observed suffix of the history.
  double prob(const std::vector<std::string>& history, const std::string& token) const {
    const std::size_t max_ctx = std::min(history.size(), tables_.size() - 1);
    const double v = static_cast<double>(vocab_.size());
    for (std::size_t k = max_ctx + 1; k-- > 0;) {
      const std::vector<std::string> ctx(history.end() - static_cast<std::ptrdiff_t>(k), history.end());
      const auto key = join(ctx);
      const auto& table = tables_[k];
      const auto tot = table.totals.find(key);
      if (tot == table.totals.end() || tot->second == 0) continue;
      double c = 0.0;
      if (auto it = table.counts.find(key); it != table.counts.end()) {
        if (auto jt = it->second.find(token); jt != it->second.end()) c = static_cast<double>(jt->second);
      }
      return (c + options_.delta) / (static_cast<double>(tot->second) + options_.delta * v);
    }
    return 1.0 / v;  // unreachable: unigram totals are positive
  }

  // Per-token probabilities of a sentence under the model.
  std::vector<double> sentence_probs(std::string_view sentence) const {
    const auto tokens = options_.tokenizer(sentence);
    if (tokens.empty()) throw Error(ErrorKind::Precondition, "sentence is empty after tokenization");
    std::vector<std::string> history(static_cast<std::size_t>(options_.order - 1), kBegin);
    std::vector<double> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
      out.push_back(prob(history, t));
      history.push_back(t);
    }
    return out;
  }

  double score_avg(std::string_view sentence) const {
    const auto p = sentence_probs(sentence);
    double sum = 0.0;
    for (double x : p) sum -= std::log(x);
    return sum / static_cast<double>(p.size());
  }

  double score_max(std::string_view sentence) const {
    const auto p = sentence_probs(sentence);
    return -std::log(*std::min_element(p.begin(), p.end()));
  }

 private:
  struct Table {
    std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> counts;
    std::unordered_map<std::string, std::size_t> totals;
  };

  static std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
      out += t;
      out += '\x1f';
    }
    return out;
  }

  void add_sequence(const std::vector<std::string>& tokens) {
    if (tokens.empty()) return;
    const auto n = static_cast<std::size_t>(options_.order);
    std::vector<std::string> seq(n - 1, kBegin);
    seq.insert(seq.end(), tokens.begin(), tokens.end());
    if (n >= 2) seq.emplace_back(kEnd);
    for (std::size_t j = n - 1; j < seq.size(); ++j) {
      vocab_.insert(seq[j]);
      for (std::size_t k = 0; k < n; ++k) {
        const std::vector<std::string> ctx(seq.begin() + static_cast<std::ptrdiff_t>(j - k),
                                           seq.begin() + static_cast<std::ptrdiff_t>(j));
        const auto key = join(ctx);
        ++tables_[k].counts[key][seq[j]];
        ++tables_[k].totals[key];
      }
    }
  }

  NgramOptions options_;
  std::vector<Table> tables_;
  std::set<std::string> vocab_;
};

}  // namespace selfcheck::ngram
