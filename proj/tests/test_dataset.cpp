#include <gtest/gtest.h>

#include <sstream>

#include "gen.hpp"
#include "selfcheck/dataset.hpp"
#include "selfcheck/hash.hpp"

using namespace selfcheck;

namespace {

std::vector<DatasetRecord> parse(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return parse_dataset(in, warnings);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
    return e.what();
  }
  ADD_FAILURE() << "expected a validation error";
  return "";
}

TEST(Dataset, EmptyFileIsEmptyList) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_TRUE(parse("\n  \n").empty());
}

TEST(Dataset, LoadsRecord) {
  const auto r = parse(
      R"({"concept":"Ada","response":"Ada was born. She wrote notes.","sentences":["Ada was born.","She wrote notes."],)"
      R"("labels":["accurate","major_inaccurate"],"samples":["Ada lived.","Ada wrote."],"reference":"Ada Lovelace."})");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].passage.concept_name(), "Ada");
  EXPECT_EQ(r[0].passage.size(), 2u);
  EXPECT_EQ(r[0].passage.labels()->at(1), SentenceLabel::MajorInaccurate);
  EXPECT_EQ(r[0].samples.size(), 2u);
  EXPECT_EQ(r[0].sampled_evidence().size(), 2u);
  EXPECT_EQ(r[0].reference_evidence().kind(), EvidenceKind::Reference);
}

TEST(Dataset, SegmentsWhenSentencesAbsent) {
  const auto r = parse(R"({"concept":"x","response":"One. Two."})");
  EXPECT_EQ(r[0].passage.sentences(), (std::vector<std::string>{"One.", "Two."}));
  EXPECT_THROW(r[0].sampled_evidence(), Error);
  EXPECT_THROW(r[0].reference_evidence(), Error);
}

TEST(Dataset, LabelLengthMismatch) {
  const auto msg = error_of(R"({"concept":"x","response":"A. B. C.","sentences":["A.","B.","C."],)"
                            R"("labels":["accurate","accurate"]})");
  EXPECT_NE(msg.find("label-length-mismatch"), std::string::npos);
}

TEST(Dataset, ReportsEveryBadLineByNumber) {
  const auto msg = error_of(std::string(R"({"concept":"x","response":"A."})") + "\n" + "{not json\n" +
                            R"({"concept":"y"})" + "\n" + R"({"concept":"z","response":"A.","labels":["great"]})");
  EXPECT_NE(msg.find("line 2: malformed-JSON"), std::string::npos);
  EXPECT_NE(msg.find("line 3: missing-field: response"), std::string::npos);
  EXPECT_NE(msg.find("line 4: unknown label"), std::string::npos);
  EXPECT_EQ(msg.find("line 1:"), std::string::npos);
}

TEST(Dataset, UnknownFieldsWarn) {
  std::vector<std::string> warnings;
  parse(R"({"concept":"x","response":"A.","wiki_bio_test_idx":3})", &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("line 1"), std::string::npos);
  EXPECT_NE(warnings[0].find("wiki_bio_test_idx"), std::string::npos);
}

TEST(Dataset, RoundTrip) {
  Rng rng(11);
  for (int i = 0; i < 150; ++i) {
    std::vector<DatasetRecord> records;
    const auto n = rng.below(4);
    for (std::size_t k = 0; k < n; ++k) {
      auto p = gen::passage(rng);
      std::optional<std::vector<SentenceLabel>> labels;
      if (rng.bernoulli(0.7)) {
        labels.emplace();
        for (std::size_t s = 0; s < p.size(); ++s) labels->push_back(static_cast<SentenceLabel>(rng.below(3)));
      }
      Passage labelled("c" + std::to_string(k), p.response(), p.sentences(), labels);
      DatasetRecord r{labelled, rng.bernoulli(0.8) ? gen::samples(rng) : std::vector<std::string>{},
                      rng.bernoulli(0.3) ? std::optional<std::string>(gen::sentence(rng)) : std::nullopt,
                      rng.bernoulli(0.5) ? std::optional<std::string>("abc123") : std::nullopt};
      records.push_back(std::move(r));
    }
    std::ostringstream out;
    write_dataset(out, records);
    const auto back = parse(out.str());
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
      EXPECT_EQ(back[k].passage, records[k].passage);
      EXPECT_EQ(back[k].samples, records[k].samples);
      EXPECT_EQ(back[k].reference, records[k].reference);
      EXPECT_EQ(back[k].config_digest, records[k].config_digest);
    }
    std::ostringstream again;
    write_dataset(again, back);
    EXPECT_EQ(again.str(), out.str());
  }
}

}  // namespace
