#pragma once

// Deterministic per-post enrichment: gazetteer entity extraction, sentiment
// targeted at entity mentions, and surface-feature credibility.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "eaims/error.hpp"
#include "eaims/post.hpp"
#include "eaims/text.hpp"

namespace eaims {

enum class EntityKind { person, organization, place };

constexpr std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::person: return "person";
    case EntityKind::organization: return "organization";
    case EntityKind::place: return "place";
  }
  return "place";
}

inline std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  if (s == "person") return EntityKind::person;
  if (s == "organization") return EntityKind::organization;
  if (s == "place") return EntityKind::place;
  return std::nullopt;
}

struct EntityMention {
  std::string entity;
  EntityKind kind = EntityKind::place;
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;
  bool operator==(const EntityMention&) const = default;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) fields.push_back(field);
  return fields;
}

inline std::string join_tokens(std::span<const std::string> tokens) {
  std::string key;
  for (const auto& t : tokens) {
    if (!key.empty()) key.push_back(' ');
    key += t;
  }
  return key;
}

}  // namespace detail

/// Surface forms of 1-3 tokens mapped to (canonical name, kind).
class Gazetteer {
 public:
  static constexpr std::size_t kMaxSurfaceTokens = 3;

  struct Entry {
    std::string canonical;
    EntityKind kind;
  };

  void add(std::string_view surface, std::string canonical, EntityKind kind) {
    const auto tokens = text::tokenize(text::normalize_nfc(surface));
    if (tokens.empty() || tokens.size() > kMaxSurfaceTokens) {
      throw Error(ErrorCode::invalid_argument,
                  "gazetteer surface must have 1-3 tokens: " + std::string(surface));
    }
    entries_[detail::join_tokens(tokens)] = Entry{std::move(canonical), kind};
  }

  /// Lines `surface<TAB>canonical<TAB>kind`; '#' starts a comment line.
  static Gazetteer parse(std::istream& in) {
    Gazetteer g;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      const auto fields = detail::split_tabs(line);
      const auto kind = fields.size() == 3 ? parse_entity_kind(fields[2]) : std::nullopt;
      if (!kind) {
        throw Error(ErrorCode::invalid_config,
                    "gazetteer line " + std::to_string(line_no) + " is malformed");
      }
      g.add(fields[0], text::normalize_nfc(fields[1]), *kind);
    }
    return g;
  }

  static Gazetteer load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open gazetteer " + path);
    return parse(in);
  }

  const Entry* find(std::span<const std::string> tokens) const {
    auto it = entries_.find(detail::join_tokens(tokens));
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Entry> entries_;
};

/// Longest match at each position, scanning left to right without overlap.
inline std::vector<EntityMention> extract_entities(std::span<const std::string> tokens,
                                                   const Gazetteer& gazetteer) {
  std::vector<EntityMention> mentions;
  if (gazetteer.empty()) return mentions;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t matched = 0;
    const std::size_t longest = std::min(Gazetteer::kMaxSurfaceTokens, tokens.size() - i);
    for (std::size_t len = longest; len >= 1; --len) {
      if (const auto* entry = gazetteer.find(tokens.subspan(i, len))) {
        mentions.push_back(EntityMention{entry->canonical, entry->kind, i, i + len});
        matched = len;
        break;
      }
    }
    i += matched == 0 ? 1 : matched;
  }
  return mentions;
}

inline std::vector<EntityMention> extract_entities(std::string_view text,
                                                   const Gazetteer& gazetteer) {
  const auto tokens = text::tokenize(text);
  return extract_entities(tokens, gazetteer);
}

class SentimentLexicon {
 public:
  void add(std::string_view term, double polarity) {
    if (!(polarity >= -1.0 && polarity <= 1.0)) {
      throw Error(ErrorCode::invalid_argument, "polarity must be in [-1, 1]");
    }
    terms_[text::to_lower(text::normalize_nfc(term))] = polarity;
  }

  std::optional<double> polarity(const std::string& token) const {
    auto it = terms_.find(token);
    if (it == terms_.end()) return std::nullopt;
    return it->second;
  }

  /// Same terms with every polarity negated.
  SentimentLexicon flipped() const {
    SentimentLexicon out;
    for (const auto& [term, p] : terms_) out.terms_[term] = -p;
    return out;
  }

  /// Lines `term<TAB>polarity`.
  static SentimentLexicon parse(std::istream& in) {
    SentimentLexicon lexicon;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      const auto fields = detail::split_tabs(line);
      double polarity = 0.0;
      bool ok = fields.size() == 2;
      if (ok) {
        try {
          std::size_t used = 0;
          polarity = std::stod(fields[1], &used);
          ok = used == fields[1].size();
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok || !(polarity >= -1.0 && polarity <= 1.0)) {
        throw Error(ErrorCode::invalid_config,
                    "sentiment lexicon line " + std::to_string(line_no) + " is malformed");
      }
      lexicon.add(fields[0], polarity);
    }
    return lexicon;
  }

  static SentimentLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open sentiment lexicon " + path);
    return parse(in);
  }

  std::size_t size() const { return terms_.size(); }

 private:
  std::unordered_map<std::string, double> terms_;
};

struct SentimentParams {
  std::size_t window = 5;
  std::size_t negation_lookback = 2;
  std::unordered_set<std::string> negators{"not", "no", "never", "nt"};
};

struct TargetSentiment {
  enum class Outcome { polarity, no_mention, no_signal };
  Outcome outcome = Outcome::no_mention;
  double polarity = 0.0;

  bool has_signal() const { return outcome == Outcome::polarity; }
  bool mentioned() const { return outcome != Outcome::no_mention; }
};

/// Mean polarity of lexicon terms within ±window tokens of each mention of
/// `entity`. A term is negated when a negator precedes it within the lookback
/// and no other lexicon term sits between the two (a negator applies to the
/// first sentiment term after it).
inline TargetSentiment target_sentiment(std::span<const std::string> tokens,
                                        std::span<const EntityMention> mentions,
                                        std::string_view entity, const SentimentLexicon& lexicon,
                                        const SentimentParams& params = {}) {
  const std::string wanted = text::to_lower(entity);
  std::vector<std::optional<double>> polarity(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) polarity[i] = lexicon.polarity(tokens[i]);

  const auto negated = [&](std::size_t j) {
    const std::size_t lo = j >= params.negation_lookback ? j - params.negation_lookback : 0;
    for (std::size_t k = j; k-- > lo;) {
      if (params.negators.count(tokens[k]) != 0) return true;
      if (polarity[k]) return false;
    }
    return false;
  };

  bool mentioned = false;
  double sum = 0.0;
  std::size_t contributions = 0;
  for (const auto& m : mentions) {
    if (text::to_lower(m.entity) != wanted) continue;
    mentioned = true;
    const std::size_t lo = m.begin >= params.window ? m.begin - params.window : 0;
    const std::size_t hi = std::min(tokens.size(), m.end + params.window);
    for (std::size_t j = lo; j < hi; ++j) {
      if (j >= m.begin && j < m.end) continue;
      if (!polarity[j]) continue;
      sum += negated(j) ? -*polarity[j] : *polarity[j];
      ++contributions;
    }
  }
  if (!mentioned) return {TargetSentiment::Outcome::no_mention, 0.0};
  if (contributions == 0) return {TargetSentiment::Outcome::no_signal, 0.0};
  return {TargetSentiment::Outcome::polarity,
          std::clamp(sum / static_cast<double>(contributions), -1.0, 1.0)};
}

inline TargetSentiment target_sentiment(const Post& post, std::string_view entity,
                                        const Gazetteer& gazetteer,
                                        const SentimentLexicon& lexicon,
                                        const SentimentParams& params = {}) {
  const auto tokens = text::tokenize(post.text);
  const auto mentions = extract_entities(tokens, gazetteer);
  return target_sentiment(tokens, mentions, entity, lexicon, params);
}

struct CredibilityWeights {
  double bias = 0.0;
  double url = 1.0;
  double followers = 1.5;
  double reposts = 1.0;
  double length = 0.5;
  double caps = -1.0;
  double exclamation = -1.0;
};

struct CredibilityFeatures {
  double url = 0.0;
  double followers = 0.0;
  double reposts = 0.0;
  double length = 0.0;
  double caps = 0.0;
  double exclamation = 0.0;

  std::array<std::pair<std::string_view, double>, 6> named() const {
    return {{{"url", url},
             {"followers", followers},
             {"reposts", reposts},
             {"length", length},
             {"caps", caps},
             {"exclamation", exclamation}}};
  }
};

struct Credibility {
  double score = 0.5;
  CredibilityFeatures features;
};

inline CredibilityFeatures credibility_features(const Post& post) {
  const auto log_scale = [](std::optional<std::int64_t> count, double cap) {
    if (!count) return 0.0;
    return std::clamp(std::log1p(static_cast<double>(*count)) / std::log1p(cap), 0.0, 1.0);
  };
  CredibilityFeatures f;
  f.url = post.urls.empty() ? 0.0 : 1.0;
  f.followers = log_scale(post.followers, 1e7);
  f.reposts = log_scale(post.reposts, 1e5);
  f.length = std::min(static_cast<double>(text::tokenize(post.text).size()) / 40.0, 1.0);
  const auto cases = text::count_case(post.text);
  f.caps = cases.alphabetic == 0
               ? 0.0
               : static_cast<double>(cases.uppercase) / static_cast<double>(cases.alphabetic);
  f.exclamation =
      std::min(static_cast<double>(std::count(post.text.begin(), post.text.end(), '!')) / 5.0,
               1.0);
  return f;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Credibility credibility(const CredibilityFeatures& f, const CredibilityWeights& w = {}) {
  const double z = w.bias + w.url * f.url + w.followers * f.followers + w.reposts * f.reposts +
                   w.length * f.length + w.caps * f.caps + w.exclamation * f.exclamation;
  // Keep the score inside the open interval even for saturating weights.
  const double score = std::clamp(logistic(z), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  return Credibility{score, f};
}

inline Credibility credibility(const Post& post, const CredibilityWeights& w = {}) {
  return credibility(credibility_features(post), w);
}

/// Bundles the enrichment resources a service shares across events.
struct Enricher {
  Gazetteer gazetteer;
  SentimentLexicon lexicon;
  SentimentParams sentiment;
  CredibilityWeights weights;
};

}  // namespace eaims
