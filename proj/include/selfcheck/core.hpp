#pragma once

#include <algorithm>
#include <cctype>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfcheck/error.hpp"
#include "selfcheck/segment.hpp"

namespace selfcheck {

// Human annotation of one sentence. Ordered by severity.
enum class SentenceLabel { Accurate = 0, MinorInaccurate = 1, MajorInaccurate = 2 };

inline constexpr double label_value(SentenceLabel label) {
  switch (label) {
    case SentenceLabel::Accurate: return 0.0;
    case SentenceLabel::MinorInaccurate: return 0.5;
    case SentenceLabel::MajorInaccurate: return 1.0;
  }
  return 0.0;
}

inline constexpr std::string_view label_name(SentenceLabel label) {
  switch (label) {
    case SentenceLabel::Accurate: return "accurate";
    case SentenceLabel::MinorInaccurate: return "minor_inaccurate";
    case SentenceLabel::MajorInaccurate: return "major_inaccurate";
  }
  return "accurate";
}

inline std::optional<SentenceLabel> parse_label(std::string_view name) {
  if (name == "accurate") return SentenceLabel::Accurate;
  if (name == "minor_inaccurate") return SentenceLabel::MinorInaccurate;
  if (name == "major_inaccurate") return SentenceLabel::MajorInaccurate;
  return std::nullopt;
}

// Two annotators disagreeing resolve to the worse label.
inline constexpr SentenceLabel merge_annotations(SentenceLabel a, SentenceLabel b) {
  return label_value(a) >= label_value(b) ? a : b;
}

class Passage {
 public:
  Passage(std::string concept_name, std::string response, std::vector<std::string> sentences,
          std::optional<std::vector<SentenceLabel>> labels = std::nullopt)
      : name_(std::move(concept_name)),
        response_(std::move(response)),
        sentences_(std::move(sentences)),
        labels_(std::move(labels)) {
    if (sentences_.empty()) throw Error(ErrorKind::Validation, "passage has no sentences");
    for (const auto& s : sentences_) {
      if (detail::trim(s).empty()) throw Error(ErrorKind::Validation, "passage contains an empty sentence");
    }
    if (labels_ && labels_->size() != sentences_.size()) {
      throw Error(ErrorKind::Validation,
                  "label-length-mismatch: " + std::to_string(sentences_.size()) + " sentences but " +
                      std::to_string(labels_->size()) + " labels");
    }
    check_sentence_order();
  }

  // Segments `response` with the default segmenter.
  static Passage from_response(std::string concept_name, std::string response,
                               std::optional<std::vector<SentenceLabel>> labels = std::nullopt) {
    auto sentences = segment_sentences(response);
    return Passage(std::move(concept_name), std::move(response), std::move(sentences), std::move(labels));
  }

  const std::string& concept_name() const { return name_; }
  const std::string& response() const { return response_; }
  const std::vector<std::string>& sentences() const { return sentences_; }
  const std::optional<std::vector<SentenceLabel>>& labels() const { return labels_; }
  std::size_t size() const { return sentences_.size(); }
  bool has_labels() const { return labels_.has_value(); }

  // Mean label projection; requires labels.
  double gold_score() const {
    if (!labels_) throw Error(ErrorKind::Validation, "passage '" + name_ + "' has no labels");
    double total = 0.0;
    for (auto l : *labels_) total += label_value(l);
    return total / static_cast<double>(labels_->size());
  }

  bool is_total_hallucination() const {
    if (!labels_) throw Error(ErrorKind::Validation, "passage '" + name_ + "' has no labels");
    return std::all_of(labels_->begin(), labels_->end(),
                       [](SentenceLabel l) { return l == SentenceLabel::MajorInaccurate; });
  }

  friend bool operator==(const Passage&, const Passage&) = default;

 private:
  // Sentences must appear in the response in order, ignoring whitespace.
  void check_sentence_order() const {
    auto squash = [](std::string_view s) {
      std::string out;
      out.reserve(s.size());
      for (char c : s)
        if (!detail::is_space(c)) out.push_back(c);
      return out;
    };
    const std::string haystack = squash(response_);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sentences_.size(); ++i) {
      const auto needle = squash(sentences_[i]);
      const auto found = haystack.find(needle, pos);
      if (found == std::string::npos) {
        throw Error(ErrorKind::Validation,
                    "sentence " + std::to_string(i) + " does not follow the previous sentence in the response");
      }
      pos = found + needle.size();
    }
  }

  std::string name_;
  std::string response_;
  std::vector<std::string> sentences_;
  std::optional<std::vector<SentenceLabel>> labels_;
};

struct EvidenceItem {
  std::string text;
  std::vector<std::string> sentences;

  explicit EvidenceItem(std::string t) : text(std::move(t)) {
    if (!detail::trim(text).empty()) sentences = segment_sentences(text);
  }
  EvidenceItem(std::string t, std::vector<std::string> s) : text(std::move(t)), sentences(std::move(s)) {}

  friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

enum class EvidenceKind { Sampled, Reference };

struct SamplingMeta {
  double temperature = 1.0;
  std::string model;
  friend bool operator==(const SamplingMeta&, const SamplingMeta&) = default;
};

// The texts a passage is checked against: N stochastic samples, or one
// reference document for the external-knowledge ablation.
class EvidenceSet {
 public:
  EvidenceSet(std::vector<EvidenceItem> items, EvidenceKind kind,
              std::optional<SamplingMeta> meta = std::nullopt)
      : items_(std::move(items)), kind_(kind), meta_(std::move(meta)) {
    if (items_.empty()) throw Error(ErrorKind::Validation, "evidence set is empty");
  }

  static EvidenceSet sampled(const std::vector<std::string>& texts,
                             std::optional<SamplingMeta> meta = std::nullopt) {
    std::vector<EvidenceItem> items;
    items.reserve(texts.size());
    for (const auto& t : texts) items.emplace_back(t);
    return EvidenceSet(std::move(items), EvidenceKind::Sampled, std::move(meta));
  }

  static EvidenceSet reference(const std::string& text) {
    std::vector<EvidenceItem> items;
    items.emplace_back(text);
    return EvidenceSet(std::move(items), EvidenceKind::Reference);
  }

  // First n items; used by the sample-count ablation.
  EvidenceSet prefix(std::size_t n) const {
    require(n >= 1, "evidence prefix length must be >= 1");
    if (n > items_.size()) {
      throw Error(ErrorKind::Precondition, "requested " + std::to_string(n) + " samples but only " +
                                               std::to_string(items_.size()) + " are available");
    }
    return EvidenceSet({items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(n)}, kind_, meta_);
  }

  const std::vector<EvidenceItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  EvidenceKind kind() const { return kind_; }
  const std::optional<SamplingMeta>& sampling_meta() const { return meta_; }

  friend bool operator==(const EvidenceSet&, const EvidenceSet&) = default;

 private:
  std::vector<EvidenceItem> items_;
  EvidenceKind kind_;
  std::optional<SamplingMeta> meta_;
};

struct SentenceScore {
  std::string method;
  double value = 0.0;
  bool bounded = true;
};

struct PassageScore {
  double value = 0.0;
  std::size_t n_sentences = 0;
};

inline PassageScore mean_passage_score(const std::vector<double>& sentence_scores) {
  require(!sentence_scores.empty(), "passage score needs at least one sentence score");
  const double sum = std::accumulate(sentence_scores.begin(), sentence_scores.end(), 0.0);
  return {sum / static_cast<double>(sentence_scores.size()), sentence_scores.size()};
}

}  // namespace selfcheck
