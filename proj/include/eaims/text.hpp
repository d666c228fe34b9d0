#pragma once

// Unicode text helpers shared by every module: NFC normalization, the
// tokenizer (split on non-alphanumeric code points, lowercase, no stemming)
// and the stopword list used by the novelty vectors.

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "eaims/error.hpp"

namespace eaims::text {

namespace detail {

inline void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t len = 0;
  U8_APPEND_UNSAFE(buf, len, c);
  out.append(buf, static_cast<std::size_t>(len));
}

// Calls fn(code_point) for each code point; invalid sequences yield a
// negative value.
template <typename Fn>
void for_each_code_point(std::string_view utf8, Fn&& fn) {
  const auto* s = reinterpret_cast<const std::uint8_t*>(utf8.data());
  const auto length = static_cast<std::int32_t>(utf8.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c = 0;
    U8_NEXT(s, i, length, c);
    fn(c);
  }
}

}  // namespace detail

inline std::string normalize_nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(utf8);
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
  if (nfc->isNormalized(source, status) && U_SUCCESS(status)) return std::string(utf8);
  status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) return std::string(utf8);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

inline std::string to_lower(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  detail::for_each_code_point(utf8, [&](UChar32 c) {
    if (c >= 0) detail::append_utf8(out, u_tolower(c));
  });
  return out;
}

inline std::string to_upper(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  detail::for_each_code_point(utf8, [&](UChar32 c) {
    if (c >= 0) detail::append_utf8(out, u_toupper(c));
  });
  return out;
}

/// Splits on every non-alphanumeric code point and lowercases each token.
inline std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> tokens;
  std::string current;
  detail::for_each_code_point(utf8, [&](UChar32 c) {
    if (c >= 0 && u_isalnum(c)) {
      detail::append_utf8(current, u_tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  });
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct CaseCounts {
  std::size_t alphabetic = 0;
  std::size_t uppercase = 0;
};

inline CaseCounts count_case(std::string_view utf8) {
  CaseCounts counts;
  detail::for_each_code_point(utf8, [&](UChar32 c) {
    if (c >= 0 && u_isalpha(c)) {
      ++counts.alphabetic;
      if (u_isupper(c)) ++counts.uppercase;
    }
  });
  return counts;
}

class StopWords {
 public:
  StopWords() = default;
  StopWords(std::initializer_list<std::string_view> words) {
    for (auto w : words) add(w);
  }

  /// The list shipped with the service: English plus the most frequent
  /// Italian function words.
  static StopWords defaults() {
    return {"a",      "about", "after", "all",   "also",  "am",    "an",    "and",   "any",
            "are",    "as",    "at",    "be",    "been",  "before", "being", "but",   "by",
            "can",    "could", "did",   "do",    "does",  "for",   "from",  "had",   "has",
            "have",   "he",    "her",   "here",  "him",   "his",   "how",   "i",     "if",
            "in",     "into",  "is",    "it",    "its",   "just",  "me",    "more",  "my",
            "of",     "on",    "or",    "our",   "out",   "over",  "she",   "so",    "some",
            "than",   "that",  "the",   "their", "them",  "then",  "there", "these", "they",
            "this",   "those", "to",    "too",   "up",    "us",    "very",  "was",   "we",
            "were",   "what",  "when",  "where", "which", "who",   "will",  "with",  "would",
            "you",    "your",  "rt",    "il",    "lo",    "la",    "gli",   "le",    "di",
            "da",     "con",   "su",    "per",   "tra",   "fra",   "e",     "ed",    "ad",
            "un",     "una",   "uno",   "che",   "del",   "della", "dei",   "delle", "al",
            "alla",   "nel",   "nella", "sono",  "non"};
  }

  /// One word per line; blank lines and lines starting with '#' are skipped.
  static StopWords load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open stopword file " + path);
    StopWords words;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      for (auto& token : tokenize(line)) words.add(token);
    }
    return words;
  }

  void add(std::string_view word) { words_.insert(to_lower(word)); }
  bool contains(const std::string& token) const { return words_.count(token) != 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

}  // namespace eaims::text
