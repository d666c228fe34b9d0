#pragma once

// Per-event analytics: interaction-graph influence, entity sentiment series
// and centrality-plus-novelty timelines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eaims/detection.hpp"
#include "eaims/enrichment.hpp"
#include "eaims/post.hpp"

namespace eaims {

/// Directed author graph: u -> v weighted by how often u replied to or
/// reposted v. Links to posts not yet seen wait until the target arrives.
class InteractionGraph {
 public:
  void add_post(const Post& post) {
    add_author(post.author, post.followers);
    author_of_.emplace(post.id, post.author);
    if (const auto& link = post.link()) {
      if (auto it = author_of_.find(*link); it != author_of_.end()) {
        add_edge(post.author, it->second);
      } else {
        pending_[*link].push_back(post.author);
      }
    }
    if (auto it = pending_.find(post.id); it != pending_.end()) {
      for (const auto& source : it->second) add_edge(source, post.author);
      pending_.erase(it);
    }
  }

  /// Self-interactions are ignored.
  void add_edge(const std::string& from, const std::string& to) {
    if (from == to) return;
    add_author(from, std::nullopt);
    add_author(to, std::nullopt);
    ++edges_[{from, to}];
  }

  void add_author(const std::string& author, std::optional<std::int64_t> followers) {
    auto& f = followers_[author];
    if (followers && (!f || *followers > *f)) f = followers;
  }

  std::size_t node_count() const { return followers_.size(); }
  std::size_t pending_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : pending_) n += v.size();
    return n;
  }

  std::uint64_t weight(const std::string& from, const std::string& to) const {
    auto it = edges_.find({from, to});
    return it == edges_.end() ? 0 : it->second;
  }

  /// Authors in lexicographic order.
  std::vector<std::string> authors() const {
    std::vector<std::string> out;
    out.reserve(followers_.size());
    for (const auto& [a, _] : followers_) out.push_back(a);
    return out;
  }

  const std::map<std::pair<std::string, std::string>, std::uint64_t>& edges() const {
    return edges_;
  }

  std::optional<std::int64_t> followers(const std::string& author) const {
    auto it = followers_.find(author);
    return it == followers_.end() ? std::nullopt : it->second;
  }

 private:
  std::map<std::string, std::optional<std::int64_t>> followers_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> edges_;
  std::unordered_map<std::string, std::string> author_of_;
  std::unordered_map<std::string, std::vector<std::string>> pending_;
};

struct InfluenceScore {
  std::string author_id;
  double score = 0.0;
  std::optional<std::int64_t> followers;
};

struct PageRankParams {
  double damping = 0.85;
  double tolerance = 1e-8;
  std::size_t max_iterations = 100;
};

/// Weighted PageRank with uniform teleport; dangling mass is spread
/// uniformly. The result is normalized to sum to one and listed in author
/// order.
inline std::vector<InfluenceScore> pagerank(const InteractionGraph& graph,
                                            const PageRankParams& params = {}) {
  const auto authors = graph.authors();
  const std::size_t n = authors.size();
  if (n == 0) return {};
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[authors[i]] = i;

  struct Edge {
    std::size_t from, to;
    double weight;
  };
  std::vector<Edge> edges;
  std::vector<double> out_weight(n, 0.0);
  for (const auto& [key, w] : graph.edges()) {
    const auto from = index.at(key.first);
    edges.push_back(Edge{from, index.at(key.second), static_cast<double>(w)});
    out_weight[from] += static_cast<double>(w);
  }

  const double uniform = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, uniform);
  std::vector<double> next(n);
  for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out_weight[i] == 0.0) dangling += rank[i];
    }
    const double base = (1.0 - params.damping) * uniform + params.damping * dangling * uniform;
    std::fill(next.begin(), next.end(), base);
    for (const Edge& e : edges) {
      next[e.to] += params.damping * rank[e.from] * e.weight / out_weight[e.from];
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - rank[i]);
    rank.swap(next);
    if (change < params.tolerance) break;
  }

  double total = 0.0;
  for (double r : rank) total += r;
  std::vector<InfluenceScore> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(InfluenceScore{authors[i], rank[i] / total, graph.followers(authors[i])});
  }
  return out;
}

/// Weighted in-degree share; kept as a baseline next to PageRank.
inline std::vector<InfluenceScore> weighted_in_degree(const InteractionGraph& graph) {
  const auto authors = graph.authors();
  if (authors.empty()) return {};
  std::map<std::string, double> in;
  double total = 0.0;
  for (const auto& [key, w] : graph.edges()) {
    in[key.second] += static_cast<double>(w);
    total += static_cast<double>(w);
  }
  std::vector<InfluenceScore> out;
  for (const auto& a : authors) {
    const double share = total == 0.0 ? 1.0 / static_cast<double>(authors.size())
                                      : in[a] / total;
    out.push_back(InfluenceScore{a, share, graph.followers(a)});
  }
  return out;
}

enum class InfluenceMethod { pagerank, degree };

/// Top-k by score, ties by author id.
inline std::vector<InfluenceScore> top_influencers(const InteractionGraph& graph, std::size_t k,
                                                   InfluenceMethod method = InfluenceMethod::pagerank,
                                                   const PageRankParams& params = {}) {
  auto scores = method == InfluenceMethod::pagerank ? pagerank(graph, params)
                                                    : weighted_in_degree(graph);
  const std::size_t take = std::min(k, scores.size());
  std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(take),
                    scores.end(), [](const InfluenceScore& a, const InfluenceScore& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.author_id < b.author_id;
                    });
  scores.resize(take);
  return scores;
}

struct SentimentBucket {
  Timestamp bucket_start = 0;
  std::string entity;
  double mean_polarity = 0.0;
  std::size_t mention_count = 0;
  std::size_t signal_count = 0;
};

struct SentimentObservation {
  Timestamp timestamp = 0;
  TargetSentiment sentiment;
};

inline Timestamp floor_bucket(Timestamp ts, Timestamp width) {
  Timestamp q = ts / width;
  if (ts % width != 0 && ts < 0) --q;
  return q * width;
}

/// Buckets by floor(timestamp / width); buckets without mentions are omitted
/// and the mean covers only posts with a signal.
inline std::vector<SentimentBucket> bucket_sentiment(std::span<const SentimentObservation> obs,
                                                     const std::string& entity, Timestamp width) {
  if (width <= 0) throw Error(ErrorCode::invalid_argument, "bucket width must be positive");
  struct Acc {
    std::size_t mentions = 0;
    std::size_t signals = 0;
    double sum = 0.0;
  };
  std::map<Timestamp, Acc> acc;
  for (const auto& o : obs) {
    if (!o.sentiment.mentioned()) continue;
    auto& a = acc[floor_bucket(o.timestamp, width)];
    ++a.mentions;
    if (o.sentiment.has_signal()) {
      ++a.signals;
      a.sum += o.sentiment.polarity;
    }
  }
  std::vector<SentimentBucket> out;
  for (const auto& [start, a] : acc) {
    const double mean = a.signals == 0 ? 0.0 : a.sum / static_cast<double>(a.signals);
    out.push_back(SentimentBucket{start, entity, std::clamp(mean, -1.0, 1.0), a.mentions,
                                  a.signals});
  }
  return out;
}

struct TimelineParams {
  Timestamp bucket_ms = 3600 * 1000;
  std::size_t min_posts = 3;
  double novelty_gate = 0.7;
};

struct TimelineEntry {
  Timestamp bucket_start = 0;
  std::string post_id;
  std::string headline;
};

struct TimelinePost {
  const Post* post = nullptr;
  const TermVector* vector = nullptr;
  double credibility = 0.5;
};

/// Fixed buckets from `start` up to `now`. In each bucket with at least
/// min_posts posts the most central post (largest summed cosine to the rest
/// of the bucket) is the candidate; it is admitted only while its cosine to
/// every earlier entry stays below the novelty gate. Ties prefer higher
/// credibility, then the earlier post.
inline std::vector<TimelineEntry> build_timeline(std::span<const TimelinePost> posts,
                                                 Timestamp start, Timestamp now,
                                                 const TimelineParams& params = {}) {
  std::map<Timestamp, std::vector<const TimelinePost*>> buckets;
  for (const auto& p : posts) {
    const Timestamp ts = p.post->timestamp;
    if (ts < start || ts > now) continue;
    buckets[start + floor_bucket(ts - start, params.bucket_ms)].push_back(&p);
  }

  std::vector<TimelineEntry> entries;
  std::vector<const TermVector*> admitted;
  for (const auto& [bucket_start, members] : buckets) {
    if (members.size() < params.min_posts) continue;

    // Σ_{j≠i} cos(v_i, v_j) = v̂_i · Σ_j v̂_j − v̂_i · v̂_i, via a unit-vector centroid.
    std::unordered_map<std::string, double> centroid;
    for (const TimelinePost* m : members) {
      if (m->vector->empty()) continue;
      for (const auto& [term, w] : m->vector->entries()) centroid[term] += w / m->vector->norm();
    }
    const TimelinePost* best = nullptr;
    double best_centrality = -1.0;
    for (const TimelinePost* m : members) {
      double centrality = 0.0;
      if (!m->vector->empty()) {
        double dot = 0.0;
        for (const auto& [term, w] : m->vector->entries()) dot += w * centroid[term];
        centrality = std::max(0.0, dot / m->vector->norm() - 1.0);
      }
      const bool wins =
          best == nullptr || centrality > best_centrality ||
          (centrality == best_centrality &&
           (m->credibility > best->credibility ||
            (m->credibility == best->credibility &&
             (m->post->timestamp < best->post->timestamp ||
              (m->post->timestamp == best->post->timestamp && m->post->id < best->post->id)))));
      if (wins) {
        best = m;
        best_centrality = centrality;
      }
    }
    const bool novel = std::all_of(admitted.begin(), admitted.end(), [&](const TermVector* v) {
      return cosine(*best->vector, *v) < params.novelty_gate;
    });
    if (!novel) continue;
    admitted.push_back(best->vector);
    entries.push_back(TimelineEntry{bucket_start, best->post->id, best->post->text});
  }
  return entries;
}

}  // namespace eaims
