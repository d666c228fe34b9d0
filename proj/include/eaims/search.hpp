#pragma once

// Incremental per-event full-text index with Okapi BM25 ranking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eaims/post.hpp"
#include "eaims/text.hpp"

namespace eaims {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
inline double bm25_idf(std::size_t document_count, std::size_t document_frequency) {
  const double n = static_cast<double>(document_count);
  const double df = static_cast<double>(document_frequency);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

inline double bm25_term_weight(double tf, double doc_length, double avg_length,
                               const Bm25Params& p) {
  return tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * doc_length / avg_length));
}

struct SearchResult {
  std::string post_id;
  double relevance = 0.0;
  double credibility = 0.5;
};

class TextIndex {
 public:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };

  struct Document {
    std::string post_id;
    Timestamp timestamp = 0;
    double credibility = 0.5;
    std::size_t length = 0;
  };

  explicit TextIndex(Bm25Params params = {}, bool weight_by_credibility = false)
      : params_(params), weight_by_credibility_(weight_by_credibility) {}

  /// Stopwords are kept: every token counts toward the document length.
  void add(std::string post_id, Timestamp timestamp, double credibility,
           std::span<const std::string> tokens) {
    const auto doc = static_cast<std::uint32_t>(docs_.size());
    std::unordered_map<std::string_view, std::uint32_t> tf;
    std::vector<std::string_view> order;
    for (const auto& token : tokens) {
      if (tf[token]++ == 0) order.push_back(token);
    }
    for (auto term : order) postings_[std::string(term)].push_back(Posting{doc, tf[term]});
    docs_.push_back(Document{std::move(post_id), timestamp, credibility, tokens.size()});
    total_length_ += tokens.size();
  }

  void add(const Post& post, double credibility) {
    const auto tokens = text::tokenize(post.text);
    add(post.id, post.timestamp, credibility, tokens);
  }

  /// Top-k by relevance; ties go to the newer post, then the smaller id.
  /// Repeated query terms contribute once per occurrence.
  std::vector<SearchResult> search(std::string_view query, std::size_t k) const {
    const auto terms = text::tokenize(query);
    if (terms.empty() || docs_.empty() || k == 0) return {};
    const double avg = average_length();
    std::unordered_map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
      auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      const double idf = bm25_idf(docs_.size(), it->second.size());
      for (const Posting& p : it->second) {
        scores[p.doc] += idf * bm25_term_weight(p.tf, static_cast<double>(docs_[p.doc].length),
                                                avg, params_);
      }
    }
    struct Scored {
      std::uint32_t doc;
      double relevance;
    };
    std::vector<Scored> ranked;
    ranked.reserve(scores.size());
    for (const auto& [doc, score] : scores) {
      ranked.push_back(
          Scored{doc, weight_by_credibility_ ? score * docs_[doc].credibility : score});
    }
    const auto better = [&](const Scored& a, const Scored& b) {
      if (a.relevance != b.relevance) return a.relevance > b.relevance;
      const auto& da = docs_[a.doc];
      const auto& db = docs_[b.doc];
      if (da.timestamp != db.timestamp) return da.timestamp > db.timestamp;
      return da.post_id < db.post_id;
    };
    const std::size_t take = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                      ranked.end(), better);
    std::vector<SearchResult> results;
    results.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      const auto& d = docs_[ranked[i].doc];
      results.push_back(SearchResult{d.post_id, ranked[i].relevance, d.credibility});
    }
    return results;
  }

  std::size_t document_count() const { return docs_.size(); }
  std::size_t total_length() const { return total_length_; }
  double average_length() const {
    return docs_.empty() ? 0.0
                         : static_cast<double>(total_length_) / static_cast<double>(docs_.size());
  }

  std::size_t document_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
  }

  std::span<const Document> documents() const { return docs_; }
  const Bm25Params& params() const { return params_; }

 private:
  Bm25Params params_;
  bool weight_by_credibility_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<Document> docs_;
  std::size_t total_length_ = 0;
};

}  // namespace eaims
