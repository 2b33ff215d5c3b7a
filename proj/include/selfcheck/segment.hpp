#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "selfcheck/error.hpp"

namespace selfcheck {

// Keep in sync with data/abbreviations.txt (checked by test_segment).
inline const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> list = {
      "mr",    "mrs",  "ms",    "dr",   "prof", "sr",   "jr",   "st",
      "mt",    "ft",   "gen",   "col",  "lt",   "sgt",  "capt", "cmdr",
      "adm",   "gov",  "sen",   "rep",  "rev",  "hon",  "pres", "fr",
      "messrs", "mme", "mlle",  "no",   "nos",  "vol",  "vols", "pp",
      "fig",   "figs", "eq",    "approx", "dept", "univ", "assn", "bros",
      "inc",   "ltd",  "co",    "corp", "vs",   "cf",   "al",   "ca",
      "jan",   "feb",  "mar",   "apr",  "jun",  "jul",  "aug",  "sep",
      "sept",  "oct",  "nov",   "dec",  "e.g",  "i.e",  "u.s",  "u.k",
      "u.n",   "d.c",  "ph.d",  "b.a",  "m.a",  "b.sc", "m.sc",
  };
  return list;
}

inline std::vector<std::string> read_abbreviation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open abbreviation file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.push_back(line);
  }
  return out;
}

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

inline bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

// Rule-based sentence splitter: a boundary follows a run of terminal
// punctuation (plus closing quotes/brackets) that is followed by whitespace
// and a non-lowercase character, unless the period ends a known abbreviation
// or a single-letter initial.
class SentenceSegmenter {
 public:
  SentenceSegmenter() : SentenceSegmenter(default_abbreviations()) {}

  explicit SentenceSegmenter(const std::vector<std::string>& abbreviations) {
    for (const auto& a : abbreviations) abbreviations_.insert(detail::lower(a));
  }

  static SentenceSegmenter from_file(const std::string& path) {
    return SentenceSegmenter(read_abbreviation_file(path));
  }

  std::vector<std::string> split(std::string_view text) const {
    if (detail::trim(text).empty()) {
      throw Error(ErrorKind::Precondition, "segment_sentences: empty input");
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
      if (!detail::is_terminator(text[i])) {
        ++i;
        continue;
      }
      const std::size_t term = i;
      std::size_t end = i;
      while (end < text.size() && (detail::is_terminator(text[end]) || detail::is_closer(text[end]))) ++end;
      i = end;
      if (end < text.size() && !detail::is_space(text[end])) continue;
      if (end < text.size()) {
        std::size_t next = end;
        while (next < text.size() && detail::is_space(text[next])) ++next;
        if (next < text.size() && std::islower(static_cast<unsigned char>(text[next]))) continue;
      }
      if (text[term] == '.' && protects_period(text, start, term)) continue;
      emit(out, text.substr(start, end - start));
      start = end;
    }
    emit(out, text.substr(start));
    return out;
  }

 private:
  // True when the word ending at `period` is an abbreviation or an initial.
  bool protects_period(std::string_view text, std::size_t floor, std::size_t period) const {
    std::size_t b = period;
    while (b > floor && !detail::is_space(text[b - 1])) --b;
    std::string_view word = text.substr(b, period - b);
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'' || word.front() == '[')) {
      word.remove_prefix(1);
    }
    if (word.empty()) return false;
    if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) return starts_name(text, period + 1);
    return abbreviations_.count(detail::lower(word)) > 0;
  }

  // An initial only counts when a name follows: a capitalised word, or
  // another initial that is itself followed by a name ("J. R. R. Tolkien",
  // but not the two one-letter sentences "A. B.").
  static bool starts_name(std::string_view text, std::size_t pos) {
    while (pos < text.size() && detail::is_space(text[pos])) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !detail::is_space(text[end])) ++end;
    const auto word = text.substr(pos, end - pos);
    if (word.empty() || !std::isupper(static_cast<unsigned char>(word[0]))) return false;
    if (word.size() == 2 && word[1] == '.') return starts_name(text, end);
    return word.size() >= 2 && std::isalpha(static_cast<unsigned char>(word[1]));
  }

  static void emit(std::vector<std::string>& out, std::string_view piece) {
    auto t = detail::trim(piece);
    if (!t.empty()) out.emplace_back(t);
  }

  std::unordered_set<std::string> abbreviations_;
};

inline std::vector<std::string> segment_sentences(std::string_view text) {
  static const SentenceSegmenter segmenter;
  return segmenter.split(text);
}

}  // namespace selfcheck
