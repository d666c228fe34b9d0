#pragma once

// Real-time discussion-thread reconstruction over an inverted index whose
// lexicon is keyed by post identifier.
//
// Every post (including placeholder entries for reply targets that have not
// been seen yet) keys a posting list holding the identifiers of all members of
// its thread, itself included. A reply t_n to t_s is indexed in three stages:
// fetch posting_list(t_s), form M = posting_list(t_s) ∪ {t_s}, then index
// M ∪ {t_n} under t_n and append t_n to the list of every member of M.
//
// Three storage backends implement the same contract:
//   KCopiesBackend    one private posting list per key (k copies of a thread
//                     of length k);
//   CompactedBackend  all keys of a thread map to one shared posting list;
//   HybridBackend     k copies while a thread is small, shared once it grows
//                     past a size threshold.
//
// Internally posts are interned into dense references in first-seen order and
// posting lists are kept sorted by reference, so the first element of every
// list is the thread root (its earliest-seen member).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eaims/error.hpp"
#include "eaims/post.hpp"

namespace eaims {

using PostRef = std::uint32_t;

/// Lexicon and posting-list access counters. Relaxed atomics: readers may
/// run concurrently under a shared lock.
struct OpCounters {
  std::atomic<std::uint64_t> lexicon_lookups{0};
  std::atomic<std::uint64_t> posting_list_reads{0};

  OpCounters() = default;
  OpCounters(const OpCounters& other)
      : lexicon_lookups(other.lexicon_lookups.load()),
        posting_list_reads(other.posting_list_reads.load()) {}
  OpCounters& operator=(const OpCounters& other) {
    lexicon_lookups = other.lexicon_lookups.load();
    posting_list_reads = other.posting_list_reads.load();
    return *this;
  }

  void reset() {
    lexicon_lookups = 0;
    posting_list_reads = 0;
  }
};

namespace detail {

inline std::vector<PostRef> sorted_union(std::span<const PostRef> a, std::span<const PostRef> b) {
  std::vector<PostRef> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool sorted_contains(std::span<const PostRef> list, PostRef p) {
  return std::binary_search(list.begin(), list.end(), p);
}

}  // namespace detail

class KCopiesBackend {
 public:
  static constexpr std::string_view name = "k-copies";

  bool contains(PostRef p) const { return p < lists_.size() && !lists_[p].empty(); }

  void add_root(PostRef n) {
    if (!contains(n)) own(n) = {n};
  }

  void add_link(PostRef n, PostRef s) {
    if (!contains(s)) own(s) = {s};
    if (!contains(n)) {
      // Stage 1 + 2: the target's list already holds t_s itself.
      std::vector<PostRef> members = lists_[s];
      // Stage 3: n is the newest reference, so appending keeps lists sorted.
      for (PostRef p : members) lists_[p].push_back(n);
      members.push_back(n);
      own(n) = std::move(members);
      return;
    }
    if (detail::sorted_contains(lists_[s], n)) return;
    // n was a placeholder with replies of its own: merge both threads.
    auto merged = detail::sorted_union(lists_[s], lists_[n]);
    for (PostRef p : merged) lists_[p] = merged;
  }

  std::span<const PostRef> posting_list(PostRef p) const { return lists_[p]; }

  template <typename Fn>
  void for_each_thread(Fn&& fn) const {
    for (PostRef p = 0; p < lists_.size(); ++p) {
      if (!lists_[p].empty() && lists_[p].front() == p) fn(std::span<const PostRef>(lists_[p]));
    }
  }

  /// Total stored posting-list entries (Σ k² over threads).
  std::size_t stored_entries() const {
    std::size_t n = 0;
    for (const auto& l : lists_) n += l.size();
    return n;
  }

 private:
  std::vector<PostRef>& own(PostRef p) {
    if (p >= lists_.size()) lists_.resize(static_cast<std::size_t>(p) + 1);
    return lists_[p];
  }

  std::vector<std::vector<PostRef>> lists_;
};

class CompactedBackend {
 public:
  static constexpr std::string_view name = "compacted";

  bool contains(PostRef p) const { return p < slot_of_.size() && slot_of_[p] != kAbsent; }

  void add_root(PostRef n) {
    if (!contains(n)) new_slot(n);
  }

  void add_link(PostRef n, PostRef s) {
    if (!contains(s)) new_slot(s);
    const std::uint32_t target = slot_of_[s];
    if (!contains(n)) {
      slots_[target].push_back(n);
      assign(n, target);
      return;
    }
    const std::uint32_t source = slot_of_[n];
    if (source == target) return;
    // Union by size: rewrite the lexicon entries of the smaller thread.
    const auto [big, small] = slots_[source].size() > slots_[target].size()
                                  ? std::pair{source, target}
                                  : std::pair{target, source};
    slots_[big] = detail::sorted_union(slots_[big], slots_[small]);
    for (PostRef p : slots_[small]) slot_of_[p] = big;
    slots_[small].clear();
    slots_[small].shrink_to_fit();
  }

  std::span<const PostRef> posting_list(PostRef p) const { return slots_[slot_of_[p]]; }

  template <typename Fn>
  void for_each_thread(Fn&& fn) const {
    for (const auto& slot : slots_) {
      if (!slot.empty()) fn(std::span<const PostRef>(slot));
    }
  }

  std::size_t stored_entries() const {
    std::size_t n = 0;
    for (const auto& s : slots_) n += s.size();
    return n;
  }

 private:
  static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

  void assign(PostRef p, std::uint32_t slot) {
    if (p >= slot_of_.size()) slot_of_.resize(static_cast<std::size_t>(p) + 1, kAbsent);
    slot_of_[p] = slot;
  }

  void new_slot(PostRef p) {
    slots_.push_back({p});
    assign(p, static_cast<std::uint32_t>(slots_.size() - 1));
  }

  std::vector<std::uint32_t> slot_of_;
  std::vector<std::vector<PostRef>> slots_;
};

class HybridBackend {
 public:
  static constexpr std::string_view name = "hybrid";
  static constexpr std::size_t kDefaultThreshold = 64;

  explicit HybridBackend(std::size_t compaction_threshold = kDefaultThreshold)
      : threshold_(compaction_threshold) {}

  bool contains(PostRef p) const { return p < lists_.size() && lists_[p] != nullptr; }

  void add_root(PostRef n) {
    if (!contains(n)) slot(n) = std::make_shared<std::vector<PostRef>>(1, n);
  }

  void add_link(PostRef n, PostRef s) {
    // Size the table up front: references into lists_ must stay valid below.
    if (std::max(n, s) >= lists_.size()) lists_.resize(static_cast<std::size_t>(std::max(n, s)) + 1);
    if (!contains(s)) slot(s) = std::make_shared<std::vector<PostRef>>(1, s);
    const std::shared_ptr<std::vector<PostRef>> target = lists_[s];
    if (!contains(n)) {
      const std::size_t new_size = target->size() + 1;
      if (is_shared(target->size())) {
        target->push_back(n);
        slot(n) = target;
      } else if (is_shared(new_size)) {
        auto shared = std::make_shared<std::vector<PostRef>>(*target);
        shared->push_back(n);
        for (PostRef p : *shared) slot(p) = shared;
      } else {
        std::vector<PostRef> members = *target;
        for (PostRef p : members) lists_[p]->push_back(n);
        members.push_back(n);
        slot(n) = std::make_shared<std::vector<PostRef>>(std::move(members));
      }
      return;
    }
    if (detail::sorted_contains(*target, n)) return;
    auto merged = detail::sorted_union(*lists_[s], *lists_[n]);
    if (is_shared(merged.size())) {
      auto shared = std::make_shared<std::vector<PostRef>>(std::move(merged));
      for (PostRef p : *shared) slot(p) = shared;
    } else {
      for (PostRef p : merged) slot(p) = std::make_shared<std::vector<PostRef>>(merged);
    }
  }

  std::span<const PostRef> posting_list(PostRef p) const { return *lists_[p]; }

  template <typename Fn>
  void for_each_thread(Fn&& fn) const {
    for (PostRef p = 0; p < lists_.size(); ++p) {
      if (lists_[p] && lists_[p]->front() == p) fn(std::span<const PostRef>(*lists_[p]));
    }
  }

  /// Distinct posting-list entries actually stored.
  std::size_t stored_entries() const {
    std::size_t n = 0;
    for (PostRef p = 0; p < lists_.size(); ++p) {
      if (!lists_[p]) continue;
      // A shared list is counted once, at its root.
      if (!is_shared(lists_[p]->size()) || lists_[p]->front() == p) n += lists_[p]->size();
    }
    return n;
  }

  std::size_t threshold() const { return threshold_; }

 private:
  bool is_shared(std::size_t size) const { return size > threshold_; }

  std::shared_ptr<std::vector<PostRef>>& slot(PostRef p) {
    if (p >= lists_.size()) lists_.resize(static_cast<std::size_t>(p) + 1);
    return lists_[p];
  }

  std::size_t threshold_;
  std::vector<std::shared_ptr<std::vector<PostRef>>> lists_;
};

struct Thread {
  std::string root_id;
  std::vector<std::string> member_ids;  // first-seen order
  std::size_t size = 0;
  std::optional<Timestamp> last_activity;
  double activity_score = 0.0;
};

struct ThreadUpdate {
  std::string root_id;
  std::size_t size = 0;
};

/// Σ 2^(-(now - t)/half_life) over members that have arrived.
inline double decayed_activity(std::span<const std::optional<Timestamp>> timestamps, Timestamp now,
                               double half_life_ms) {
  double score = 0.0;
  for (const auto& ts : timestamps) {
    if (ts) score += std::exp2(-static_cast<double>(now - *ts) / half_life_ms);
  }
  return score;
}

inline constexpr double kDefaultHalfLifeMs = 6.0 * 3600.0 * 1000.0;

template <typename Backend>
class ThreadIndex {
 public:
  ThreadIndex() = default;
  explicit ThreadIndex(Backend backend) : backend_(std::move(backend)) {}

  ThreadUpdate observe(const Post& post) { return observe(post.id, post.timestamp, post.link()); }

  ThreadUpdate observe(const std::string& post_id, Timestamp timestamp,
                       const std::optional<std::string>& link) {
    // The target is interned before the new post so a fresh placeholder is
    // older than its first reply.
    std::optional<PostRef> target;
    if (link) target = intern(*link);
    const PostRef n = intern(post_id);
    timestamps_[n] = timestamp;
    if (target) {
      backend_.add_link(n, *target);
    } else {
      backend_.add_root(n);
    }
    const auto list = backend_.posting_list(n);
    return ThreadUpdate{ids_[list.front()], list.size()};
  }

  bool contains(const std::string& post_id) const { return lexicon_.count(post_id) != 0; }

  /// One lexicon lookup, one posting-list read.
  Thread thread_of(const std::string& post_id, std::optional<Timestamp> now = std::nullopt,
                   double half_life_ms = kDefaultHalfLifeMs) const {
    counters_.lexicon_lookups.fetch_add(1, std::memory_order_relaxed);
    auto it = lexicon_.find(post_id);
    if (it == lexicon_.end()) throw Error(ErrorCode::unknown_post, post_id);
    counters_.posting_list_reads.fetch_add(1, std::memory_order_relaxed);
    return make_thread(backend_.posting_list(it->second), now, half_life_ms);
  }

  /// Raw member identifiers keyed by `post_id`.
  std::vector<std::string> posting_list(const std::string& post_id) const {
    auto it = lexicon_.find(post_id);
    if (it == lexicon_.end()) throw Error(ErrorCode::unknown_post, post_id);
    std::vector<std::string> out;
    for (PostRef p : backend_.posting_list(it->second)) out.push_back(ids_[p]);
    return out;
  }

  /// Threads ranked by decayed activity, then size, then root id.
  std::vector<Thread> top_threads(std::size_t k, Timestamp now,
                                  double half_life_ms = kDefaultHalfLifeMs) const {
    struct Ranked {
      double score;
      std::size_t size;
      PostRef root;
      std::span<const PostRef> members;
    };
    std::vector<Ranked> ranked;
    std::vector<std::optional<Timestamp>> ts;
    backend_.for_each_thread([&](std::span<const PostRef> members) {
      ts.clear();
      for (PostRef p : members) ts.push_back(timestamps_[p]);
      ranked.push_back(Ranked{decayed_activity(ts, now, half_life_ms), members.size(),
                              members.front(), members});
    });
    const auto better = [&](const Ranked& a, const Ranked& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.size != b.size) return a.size > b.size;
      return ids_[a.root] < ids_[b.root];
    };
    const std::size_t take = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                      ranked.end(), better);
    std::vector<Thread> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      out.push_back(make_thread(ranked[i].members, now, half_life_ms));
    }
    return out;
  }

  std::optional<Timestamp> timestamp_of(const std::string& post_id) const {
    auto it = lexicon_.find(post_id);
    if (it == lexicon_.end()) return std::nullopt;
    return timestamps_[it->second];
  }

  std::size_t key_count() const { return ids_.size(); }

  std::size_t thread_count() const {
    std::size_t n = 0;
    backend_.for_each_thread([&](std::span<const PostRef>) { ++n; });
    return n;
  }

  const OpCounters& counters() const { return counters_; }
  void reset_counters() const { counters_.reset(); }
  const Backend& backend() const { return backend_; }

 private:
  PostRef intern(const std::string& id) {
    auto [it, inserted] = lexicon_.try_emplace(id, static_cast<PostRef>(ids_.size()));
    if (inserted) {
      ids_.push_back(id);
      timestamps_.emplace_back();
    }
    return it->second;
  }

  Thread make_thread(std::span<const PostRef> members, std::optional<Timestamp> now,
                     double half_life_ms) const {
    Thread t;
    t.root_id = ids_[members.front()];
    t.size = members.size();
    t.member_ids.reserve(members.size());
    std::vector<std::optional<Timestamp>> ts;
    ts.reserve(members.size());
    for (PostRef p : members) {
      t.member_ids.push_back(ids_[p]);
      ts.push_back(timestamps_[p]);
      if (timestamps_[p] && (!t.last_activity || *timestamps_[p] > *t.last_activity)) {
        t.last_activity = timestamps_[p];
      }
    }
    if (now) t.activity_score = decayed_activity(ts, *now, half_life_ms);
    return t;
  }

  std::unordered_map<std::string, PostRef> lexicon_;
  std::vector<std::string> ids_;
  std::vector<std::optional<Timestamp>> timestamps_;  // nullopt for placeholders
  Backend backend_;
  mutable OpCounters counters_;
};

}  // namespace eaims
