#include <gtest/gtest.h>

#include "selfcheck/hash.hpp"
#include "selfcheck/segment.hpp"

using namespace selfcheck;
using Sentences = std::vector<std::string>;

namespace {

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

TEST(Segment, Examples) {
  EXPECT_EQ(segment_sentences("A. B."), (Sentences{"A.", "B."}));
  EXPECT_EQ(segment_sentences("Dr. Smith was born in 1970. He died."),
            (Sentences{"Dr. Smith was born in 1970.", "He died."}));
  EXPECT_EQ(segment_sentences("one sentence no period"), (Sentences{"one sentence no period"}));
}

TEST(Segment, WhitespaceOnlyIsAnError) {
  EXPECT_THROW(segment_sentences(""), Error);
  EXPECT_THROW(segment_sentences("  \n\t "), Error);
}

TEST(Segment, Boundaries) {
  EXPECT_EQ(segment_sentences("Is it? Yes! Fine."), (Sentences{"Is it?", "Yes!", "Fine."}));
  EXPECT_EQ(segment_sentences("He said \"go.\" Then left."), (Sentences{"He said \"go.\"", "Then left."}));
  EXPECT_EQ(segment_sentences("J. R. R. Tolkien wrote it. Done."), (Sentences{"J. R. R. Tolkien wrote it.", "Done."}));
  EXPECT_EQ(segment_sentences("Version 2.5 shipped. Next."), (Sentences{"Version 2.5 shipped.", "Next."}));
  EXPECT_EQ(segment_sentences("It ended e.g. badly. Next."), (Sentences{"It ended e.g. badly.", "Next."}));
  EXPECT_EQ(segment_sentences("He moved to the U.S. In 1990 he won."),
            (Sentences{"He moved to the U.S. In 1990 he won."}));
}

TEST(Segment, ShippedListMatchesEmbeddedDefault) {
  const auto from_file = read_abbreviation_file(std::string(SELFCHECK_DATA_DIR) + "/abbreviations.txt");
  EXPECT_EQ(from_file, default_abbreviations());
}

TEST(Segment, CustomList) {
  const SentenceSegmenter seg({"approx"});
  EXPECT_EQ(seg.split("Dr. Who. Approx. ten."), (Sentences{"Dr.", "Who.", "Approx. ten."}));
}

TEST(Segment, ReconstructsTextModuloWhitespace) {
  static const char* pieces[] = {"Dr.", "Smith", "was", "born", "in", "1970.", "He", "died!", "Why?", "no",
                                 "U.S.", "e.g.", "A.", "\"Quote.\"", "(aside)", "x", "The", "end."};
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const auto n = 1 + rng.below(15);
    for (std::size_t k = 0; k < n; ++k) {
      text += pieces[rng.below(std::size(pieces))];
      text += rng.bernoulli(0.2) ? "\n" : " ";
    }
    const auto out = segment_sentences(text);
    ASSERT_FALSE(out.empty());
    std::string joined;
    for (const auto& s : out) {
      EXPECT_FALSE(s.empty());
      joined += s;
    }
    EXPECT_EQ(squash(joined), squash(text));
    EXPECT_EQ(segment_sentences(text), out);
  }
}

}  // namespace
