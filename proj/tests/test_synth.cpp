#include <gtest/gtest.h>

#include <sstream>

#include "selfcheck/dataset.hpp"
#include "selfcheck/ngram.hpp"
#include "selfcheck/synth.hpp"

using namespace selfcheck;
using namespace selfcheck::synth;

namespace {

std::string dump(const SynthSpec& spec) {
  std::ostringstream out;
  write_dataset(out, generate_corpus(spec));
  return out.str();
}

TEST(Synth, Deterministic) {
  SynthSpec spec;
  spec.n_concepts = 5;
  spec.consistency_noise = 0.3;
  spec.seed = 11;
  EXPECT_EQ(dump(spec), dump(spec));
  auto other = spec;
  other.seed = 12;
  EXPECT_NE(dump(spec), dump(other));
}

TEST(Synth, ShapeAndRoundTrip) {
  SynthSpec spec;
  spec.n_concepts = 3;
  spec.sentences_per_passage = 4;
  spec.tokens_per_sentence = 5;
  spec.n_samples = 6;
  const auto corpus = generate_corpus(spec);
  ASSERT_EQ(corpus.size(), 3u);
  for (const auto& r : corpus) {
    EXPECT_EQ(r.passage.size(), 4u);
    EXPECT_EQ(r.samples.size(), 6u);
    EXPECT_EQ(word_tokens(r.passage.sentences()[0]).size(), 5u);
  }
  std::istringstream in(dump(spec));
  const auto parsed = parse_dataset(in);
  ASSERT_EQ(parsed.size(), 3u);
  EXPECT_EQ(parsed[1].passage.sentences(), corpus[1].passage.sentences());
  EXPECT_EQ(*parsed[1].passage.labels(), *corpus[1].passage.labels());
  EXPECT_EQ(parsed[1].samples, corpus[1].samples);
}

TEST(Synth, NoHallucinationMeansEverySampleRepeatsTheFacts) {
  SynthSpec spec;
  spec.n_concepts = 4;
  spec.halluc_rate = 0.0;
  spec.n_samples = 5;
  for (const auto& r : generate_corpus(spec)) {
    for (auto l : *r.passage.labels()) EXPECT_EQ(l, SentenceLabel::Accurate);
    for (const auto& s : r.samples) EXPECT_EQ(s, r.passage.response());
  }
}

TEST(Synth, FullHallucinationIsTotal) {
  SynthSpec spec;
  spec.n_concepts = 4;
  spec.halluc_rate = 1.0;
  for (const auto& r : generate_corpus(spec)) {
    EXPECT_TRUE(r.passage.is_total_hallucination());
    for (const auto& s : r.samples)
      for (const auto& sentence : r.passage.sentences()) EXPECT_EQ(s.find(sentence), std::string::npos);
  }
}

TEST(Synth, ZeroNoiseSeparatesWithinEveryPassage) {
  SynthSpec spec;
  spec.n_concepts = 20;
  spec.seed = 5;
  for (const auto& r : generate_corpus(spec)) {
    const ngram::NgramModel model(r.sampled_evidence(), r.passage);
    double worst_fact = -1.0, best_halluc = 1e300;
    bool any_fact = false, any_halluc = false;
    for (std::size_t i = 0; i < r.passage.size(); ++i) {
      const double s = model.score_max(r.passage.sentences()[i]);
      if ((*r.passage.labels())[i] == SentenceLabel::Accurate) {
        worst_fact = std::max(worst_fact, s);
        any_fact = true;
      } else {
        best_halluc = std::min(best_halluc, s);
        any_halluc = true;
      }
    }
    if (any_fact && any_halluc) {
      EXPECT_GT(best_halluc, worst_fact) << r.passage.concept_name();
    }
  }
}

TEST(Synth, Validation) {
  SynthSpec spec;
  spec.halluc_vocab = {"zor0", "zzz"};
  spec.fact_vocab = {"zor0"};
  EXPECT_THROW(generate_corpus(spec), Error);
  spec = SynthSpec{};
  spec.halluc_rate = 1.5;
  EXPECT_THROW(generate_corpus(spec), Error);
  spec = SynthSpec{};
  spec.consistency_noise = -0.1;
  EXPECT_THROW(generate_corpus(spec), Error);
  spec = SynthSpec{};
  spec.n_samples = 0;
  EXPECT_THROW(generate_corpus(spec), Error);
}

}  // namespace
