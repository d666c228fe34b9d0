#pragma once

// First-story detection: term vectors, random-hyperplane LSH over a sliding
// window of recent profile-matching posts, and ping emission.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "eaims/error.hpp"
#include "eaims/ingest.hpp"
#include "eaims/post.hpp"
#include "eaims/text.hpp"

namespace eaims {

/// Sparse term-frequency vector, sorted by term.
class TermVector {
 public:
  using Entry = std::pair<std::string, double>;

  TermVector() = default;

  static TermVector from_tokens(std::span<const std::string> tokens,
                                const text::StopWords& stopwords) {
    std::unordered_map<std::string, double> counts;
    for (const auto& token : tokens) {
      if (!stopwords.contains(token)) counts[token] += 1.0;
    }
    TermVector v;
    v.entries_.assign(counts.begin(), counts.end());
    std::sort(v.entries_.begin(), v.entries_.end());
    double sq = 0.0;
    for (const auto& [term, weight] : v.entries_) sq += weight * weight;
    v.norm_ = std::sqrt(sq);
    return v;
  }

  std::span<const Entry> entries() const { return entries_; }
  double norm() const { return norm_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  double weight(std::string_view term) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), term,
                               [](const Entry& e, std::string_view t) { return e.first < t; });
    return (it != entries_.end() && it->first == term) ? it->second : 0.0;
  }

  double dot(const TermVector& other) const {
    double sum = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
      if (a->first < b->first) {
        ++a;
      } else if (b->first < a->first) {
        ++b;
      } else {
        sum += a->second * b->second;
        ++a;
        ++b;
      }
    }
    return sum;
  }

  bool operator==(const TermVector&) const = default;

 private:
  std::vector<Entry> entries_;
  double norm_ = 0.0;
};

inline TermVector vectorize(std::string_view text, const text::StopWords& stopwords) {
  const auto tokens = text::tokenize(text);
  return TermVector::from_tokens(tokens, stopwords);
}

/// Cosine similarity; 0 when either vector is empty.
inline double cosine(const TermVector& a, const TermVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  return std::clamp(a.dot(b) / (a.norm() * b.norm()), 0.0, 1.0);
}

struct LshParams {
  std::size_t window = 2000;
  std::size_t tables = 8;
  std::size_t bits = 12;
  std::uint64_t seed = 42;
};

/// Random-hyperplane signatures for sparse vectors. Each hyperplane
/// coordinate is a standard normal derived from (seed, hyperplane, term), so
/// the hash family never needs to know the vocabulary in advance.
class HyperplaneHasher {
 public:
  explicit HyperplaneHasher(const LshParams& params)
      : tables_(params.tables), bits_(params.bits), seed_(params.seed) {
    if (tables_ == 0 || bits_ == 0 || bits_ > 32) {
      throw Error(ErrorCode::invalid_argument, "LSH needs tables >= 1 and bits in [1, 32]");
    }
  }

  std::vector<std::uint32_t> signatures(const TermVector& v) const {
    std::vector<double> projection(tables_ * bits_, 0.0);
    for (const auto& [term, weight] : v.entries()) {
      const std::uint64_t term_hash = fnv1a(term);
      for (std::size_t k = 0; k < projection.size(); ++k) {
        projection[k] += weight * gaussian(term_hash, k);
      }
    }
    std::vector<std::uint32_t> sigs(tables_, 0);
    for (std::size_t t = 0; t < tables_; ++t) {
      for (std::size_t b = 0; b < bits_; ++b) {
        if (projection[t * bits_ + b] > 0.0) sigs[t] |= (1u << b);
      }
    }
    return sigs;
  }

  std::size_t tables() const { return tables_; }

 private:
  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  double gaussian(std::uint64_t term_hash, std::size_t hyperplane) const {
    const std::uint64_t base =
        splitmix(term_hash ^ splitmix(seed_ ^ (static_cast<std::uint64_t>(hyperplane) << 32)));
    const std::uint64_t r1 = splitmix(base);
    const std::uint64_t r2 = splitmix(r1);
    // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
    const double u1 = (static_cast<double>(r1 >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(r2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t tables_;
  std::size_t bits_;
  std::uint64_t seed_;
};

struct NoveltyResult {
  double novelty = 1.0;
  std::optional<std::string> nearest_id;
  double max_similarity = 0.0;
  std::size_t candidates = 0;
};

/// Sliding window of the last W vectors with L hash tables over it.
class NoveltyWindow {
 public:
  struct Entry {
    std::uint64_t seq = 0;
    std::string post_id;
    TermVector vector;
    std::vector<std::uint32_t> signatures;
  };

  explicit NoveltyWindow(const LshParams& params = {})
      : capacity_(params.window), hasher_(params), buckets_(params.tables) {
    if (capacity_ == 0) throw Error(ErrorCode::invalid_argument, "window must hold >= 1 post");
  }

  std::vector<std::uint32_t> sign(const TermVector& v) const { return hasher_.signatures(v); }

  /// Window entries sharing at least one bucket with `signatures`, oldest first.
  std::vector<const Entry*> candidates(std::span<const std::uint32_t> signatures) const {
    std::vector<std::uint64_t> seqs;
    for (std::size_t t = 0; t < buckets_.size(); ++t) {
      auto it = buckets_[t].find(signatures[t]);
      if (it == buckets_[t].end()) continue;
      seqs.insert(seqs.end(), it->second.begin(), it->second.end());
    }
    std::sort(seqs.begin(), seqs.end());
    seqs.erase(std::unique(seqs.begin(), seqs.end()), seqs.end());
    std::vector<const Entry*> out;
    out.reserve(seqs.size());
    for (auto seq : seqs) out.push_back(&entries_[seq - entries_.front().seq]);
    return out;
  }

  /// 1 - max cosine over LSH candidates; empty vectors are never novel.
  NoveltyResult score(const TermVector& v, std::span<const std::uint32_t> signatures) const {
    NoveltyResult result;
    if (v.empty()) {
      result.novelty = 0.0;
      return result;
    }
    const auto cands = candidates(signatures);
    result.candidates = cands.size();
    for (const Entry* e : cands) {
      const double sim = cosine(v, e->vector);
      if (sim > result.max_similarity || (!result.nearest_id && sim > 0.0)) {
        result.max_similarity = sim;
        result.nearest_id = e->post_id;
      }
    }
    result.novelty = std::clamp(1.0 - result.max_similarity, 0.0, 1.0);
    return result;
  }

  NoveltyResult score(const TermVector& v) const { return score(v, sign(v)); }

  void insert(std::string post_id, TermVector v, std::vector<std::uint32_t> signatures) {
    if (entries_.size() == capacity_) evict_oldest();
    const std::uint64_t seq = next_seq_++;
    for (std::size_t t = 0; t < buckets_.size(); ++t) buckets_[t][signatures[t]].push_back(seq);
    entries_.push_back(Entry{seq, std::move(post_id), std::move(v), std::move(signatures)});
  }

  void insert(std::string post_id, TermVector v) {
    auto sigs = sign(v);
    insert(std::move(post_id), std::move(v), std::move(sigs));
  }

  const std::deque<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  void evict_oldest() {
    const Entry& old = entries_.front();
    for (std::size_t t = 0; t < buckets_.size(); ++t) {
      auto it = buckets_[t].find(old.signatures[t]);
      // Bucket contents are in insertion order, so the oldest is in front.
      it->second.pop_front();
      if (it->second.empty()) buckets_[t].erase(it);
    }
    entries_.pop_front();
  }

  std::size_t capacity_;
  HyperplaneHasher hasher_;
  std::vector<std::unordered_map<std::uint32_t, std::deque<std::uint64_t>>> buckets_;
  std::deque<Entry> entries_;
  std::uint64_t next_seq_ = 0;
};

struct PingAlert {
  std::string post_id;
  std::string profile_id;
  double novelty = 0.0;
  Timestamp timestamp = 0;
  std::optional<Geo> geo;
};

/// Scores each profile-matching post once against the shared window and
/// emits one ping per profile whose threshold it clears.
class Detector {
 public:
  Detector(const LshParams& params, text::StopWords stopwords)
      : window_(params), stopwords_(std::move(stopwords)) {}

  std::vector<PingAlert> detect(const Post& post, std::span<const TrackingProfile> profiles) {
    const auto tokens = text::tokenize(post.text);
    std::vector<const TrackingProfile*> matching;
    for (const auto& profile : profiles) {
      if (matches_terms(tokens, profile.keywords)) matching.push_back(&profile);
    }
    if (matching.empty()) return {};

    auto vec = TermVector::from_tokens(tokens, stopwords_);
    auto sigs = window_.sign(vec);
    const NoveltyResult result = window_.score(vec, sigs);
    last_ = result;

    std::vector<PingAlert> pings;
    if (!vec.empty()) {
      for (const TrackingProfile* profile : matching) {
        if (result.novelty >= profile->novelty_threshold) {
          pings.push_back(
              PingAlert{post.id, profile->id, result.novelty, post.timestamp, post.geo});
        }
      }
    }
    window_.insert(post.id, std::move(vec), std::move(sigs));
    return pings;
  }

  /// Novelty of `post` against the current window, without inserting it.
  NoveltyResult novelty(const Post& post) const {
    return window_.score(TermVector::from_tokens(text::tokenize(post.text), stopwords_));
  }

  /// Re-inserts a post into the window without scoring (used on restore).
  void remember(const Post& post) {
    window_.insert(post.id, TermVector::from_tokens(text::tokenize(post.text), stopwords_));
  }

  const NoveltyWindow& window() const { return window_; }
  const std::optional<NoveltyResult>& last_result() const { return last_; }
  const text::StopWords& stopwords() const { return stopwords_; }

 private:
  NoveltyWindow window_;
  text::StopWords stopwords_;
  std::optional<NoveltyResult> last_;
};

}  // namespace eaims
