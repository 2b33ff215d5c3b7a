#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "selfcheck/core.hpp"
#include "selfcheck/dataset.hpp"
#include "selfcheck/error.hpp"
#include "selfcheck/hash.hpp"

namespace selfcheck::synth {

// Deterministic pseudo-word for index i; words from different `heads` never
// coincide because the first syllable encodes the pool.
inline std::string pool_word(const char* head, std::uint64_t i) {
  static constexpr const char* syllables[] = {"ba", "de", "fi", "go", "ku", "la", "me", "ni",
                                              "po", "ru", "sa", "te", "vi", "wo", "xu", "ye"};
  std::string w = head;
  do {
    w += syllables[i % 16];
    i /= 16;
  } while (i > 0);
  return w;
}

inline std::vector<std::string> make_pool(const char* head, std::size_t size) {
  std::vector<std::string> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(pool_word(head, i));
  return out;
}

struct SynthSpec {
  std::size_t n_concepts = 20;
  std::size_t sentences_per_passage = 10;
  std::size_t tokens_per_sentence = 8;
  std::vector<std::string> fact_vocab = make_pool("zor", 2000);
  std::vector<std::string> halluc_vocab = make_pool("qim", 20000);
  double halluc_rate = 0.5;
  std::size_t n_samples = 20;
  double consistency_noise = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_concepts >= 1, "synth: n_concepts must be >= 1");
    require(sentences_per_passage >= 1, "synth: sentences_per_passage must be >= 1");
    require(tokens_per_sentence >= 1, "synth: tokens_per_sentence must be >= 1");
    require(n_samples >= 1, "synth: n_samples must be >= 1");
    require(!fact_vocab.empty() && !halluc_vocab.empty(), "synth: vocabularies must be non-empty");
    require(halluc_rate >= 0.0 && halluc_rate <= 1.0, "synth: halluc_rate must be in [0,1]");
    require(consistency_noise >= 0.0 && consistency_noise <= 1.0, "synth: consistency_noise must be in [0,1]");
    const std::set<std::string> facts(fact_vocab.begin(), fact_vocab.end());
    for (const auto& w : halluc_vocab) {
      require(!facts.count(w), "synth: vocabularies overlap on '" + w + "'");
    }
  }
};

namespace detail {

inline std::string render_sentence(const std::vector<std::string>& pool, std::size_t n_tokens, Rng& rng) {
  std::string s;
  for (std::size_t t = 0; t < n_tokens; ++t) {
    if (t) s += ' ';
    s += pool[rng.below(pool.size())];
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  s += '.';
  return s;
}

inline std::string join(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

}  // namespace detail

// Builds labelled passages and their sample sets.
//
// Every response sentence carries a latent propensity u ~ U(0,1). In each
// sample, the sentence is re-emitted verbatim with probability
//   accurate:   (1 - noise) + noise * u
//   hallucinated:             noise * u
// and otherwise replaced by a fresh sentence drawn from halluc_vocab. With
// noise = 0, facts recur in every sample and hallucinations never do; with
// noise = 1 the label carries no information about recurrence.
inline std::vector<DatasetRecord> generate_corpus(const SynthSpec& spec) {
  spec.validate();
  std::vector<DatasetRecord> out;
  out.reserve(spec.n_concepts);
  for (std::size_t c = 0; c < spec.n_concepts; ++c) {
    Rng rng(fnv1a("concept:" + std::to_string(c), spec.seed * 0x9e3779b97f4a7c15ULL + 1));
    std::vector<std::string> sentences;
    std::vector<SentenceLabel> labels;
    std::vector<double> propensity;
    for (std::size_t i = 0; i < spec.sentences_per_passage; ++i) {
      const bool halluc = rng.bernoulli(spec.halluc_rate);
      const auto& pool = halluc ? spec.halluc_vocab : spec.fact_vocab;
      sentences.push_back(detail::render_sentence(pool, spec.tokens_per_sentence, rng));
      labels.push_back(halluc ? SentenceLabel::MajorInaccurate : SentenceLabel::Accurate);
      propensity.push_back(rng.uniform());
    }
    std::vector<std::string> samples;
    for (std::size_t n = 0; n < spec.n_samples; ++n) {
      std::vector<std::string> sample;
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        const double base = labels[i] == SentenceLabel::Accurate ? 1.0 - spec.consistency_noise : 0.0;
        const double keep = base + spec.consistency_noise * propensity[i];
        if (rng.bernoulli(keep)) {
          sample.push_back(sentences[i]);
        } else {
          sample.push_back(detail::render_sentence(spec.halluc_vocab, spec.tokens_per_sentence, rng));
        }
      }
      samples.push_back(detail::join(sample));
    }
    char name[32];
    std::snprintf(name, sizeof name, "synthetic_%04zu", c);
    auto response = detail::join(sentences);
    DatasetRecord record{Passage(name, response, sentences, labels), std::move(samples), std::nullopt, std::nullopt};
    out.push_back(std::move(record));
  }
  return out;
}

}  // namespace selfcheck::synth
