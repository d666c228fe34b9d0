#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the structures it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "eaims/text.hpp"

namespace eaims::oracle {

/// Thread membership by union-find over (post, link target) edges.
class ThreadOracle {
 public:
  void observe(const std::string& id, const std::optional<std::string>& link) {
    node(id);
    if (link) unite(node(*link), node(id));
  }

  std::set<std::string> members(const std::string& id) {
    std::set<std::string> out;
    const std::size_t root = find(index_.at(id));
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (find(i) == root) out.insert(names_[i]);
    }
    return out;
  }

  /// Component of every known id, computed in one pass.
  std::unordered_map<std::string, std::set<std::string>> all_members() {
    std::unordered_map<std::size_t, std::set<std::string>> by_root;
    for (std::size_t i = 0; i < names_.size(); ++i) by_root[find(i)].insert(names_[i]);
    std::unordered_map<std::string, std::set<std::string>> out;
    for (std::size_t i = 0; i < names_.size(); ++i) out[names_[i]] = by_root[find(i)];
    return out;
  }

  const std::vector<std::string>& ids() const { return names_; }

 private:
  std::size_t node(const std::string& id) {
    auto [it, inserted] = index_.try_emplace(id, names_.size());
    if (inserted) {
      names_.push_back(id);
      parent_.push_back(parent_.size());
    }
    return it->second;
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[b] = a;
  }

  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> names_;
  std::vector<std::size_t> parent_;
};

struct StreamPost {
  std::string id;
  std::optional<std::string> link;
  std::int64_t ts = 0;
};

/// Randomized reply forest: each post replies with probability `reply_p`;
/// a reply targets a post that has not arrived yet (or never will) with
/// probability `orphan_p`, otherwise a uniformly chosen earlier post.
inline std::vector<StreamPost> random_reply_stream(std::size_t n, double reply_p, double orphan_p,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<StreamPost> posts;
  posts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    StreamPost p;
    p.id = "p" + std::to_string(i);
    p.ts = 1'000'000 + static_cast<std::int64_t>(i) * 1000;
    if (u(rng) < reply_p && (i > 0 || u(rng) < orphan_p)) {
      if (i == 0 || u(rng) < orphan_p) {
        // Future arrival or a post outside the stream (ids >= n).
        std::uniform_int_distribution<std::size_t> future(i + 1, n + n / 10 + 1);
        p.link = "p" + std::to_string(future(rng));
      } else {
        std::uniform_int_distribution<std::size_t> past(0, i - 1);
        p.link = "p" + std::to_string(past(rng));
      }
    }
    posts.push_back(std::move(p));
  }
  return posts;
}

/// Sparse cosine over raw term-frequency maps.
inline double tf_cosine(const std::map<std::string, double>& a,
                        const std::map<std::string, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : a) {
    na += w * w;
    if (auto it = b.find(t); it != b.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : b) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb)));
}

inline std::map<std::string, double> tf_map(const std::string& text,
                                            const text::StopWords& stopwords) {
  std::map<std::string, double> m;
  for (const auto& t : text::tokenize(text)) {
    if (!stopwords.contains(t)) m[t] += 1.0;
  }
  return m;
}

/// Brute-force nearest neighbour over every window member.
struct ExactNeighbour {
  double max_similarity = 0.0;
  double novelty = 1.0;
};

inline ExactNeighbour exact_novelty(const std::map<std::string, double>& query,
                                    const std::vector<std::map<std::string, double>>& window) {
  ExactNeighbour r;
  if (query.empty()) {
    r.novelty = 0.0;
    return r;
  }
  for (const auto& w : window) r.max_similarity = std::max(r.max_similarity, tf_cosine(query, w));
  r.novelty = 1.0 - r.max_similarity;
  return r;
}

/// Exhaustive BM25 over every document, summing query terms in order.
struct BruteDoc {
  std::string id;
  std::int64_t ts = 0;
  std::vector<std::string> tokens;
};

struct BruteHit {
  std::string id;
  double score = 0.0;
};

inline std::vector<BruteHit> brute_bm25(const std::vector<BruteDoc>& docs,
                                        const std::string& query, std::size_t k,
                                        double k1 = 1.2, double b = 0.75) {
  const auto terms = text::tokenize(query);
  if (terms.empty() || docs.empty()) return {};
  double total = 0.0;
  for (const auto& d : docs) total += static_cast<double>(d.tokens.size());
  const double avg = total / static_cast<double>(docs.size());
  const double n = static_cast<double>(docs.size());

  std::vector<double> dfs;
  for (const auto& term : terms) {
    double df = 0.0;
    for (const auto& other : docs) {
      if (std::find(other.tokens.begin(), other.tokens.end(), term) != other.tokens.end()) {
        df += 1.0;
      }
    }
    dfs.push_back(df);
  }

  std::vector<std::pair<const BruteDoc*, double>> scored;
  for (const auto& d : docs) {
    double score = 0.0;
    bool any = false;
    for (std::size_t q = 0; q < terms.size(); ++q) {
      const auto& term = terms[q];
      const double df = dfs[q];
      const double tf =
          static_cast<double>(std::count(d.tokens.begin(), d.tokens.end(), term));
      if (tf == 0.0) continue;
      any = true;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double len = static_cast<double>(d.tokens.size());
      score += idf * (tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg)));
    }
    if (any) scored.emplace_back(&d, score);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    if (x.first->ts != y.first->ts) return x.first->ts > y.first->ts;
    return x.first->id < y.first->id;
  });
  std::vector<BruteHit> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) {
    out.push_back(BruteHit{scored[i].first->id, scored[i].second});
  }
  return out;
}

/// Dense power iteration on the Google matrix, run for a fixed number of
/// steps far past convergence.
inline std::vector<double> power_iteration_pagerank(
    std::size_t n, const std::vector<std::vector<double>>& weights, double damping = 0.85,
    std::size_t steps = 1000) {
  // weights[u][v] = weight of edge u -> v
  std::vector<std::vector<double>> google(n, std::vector<double>(n, 0.0));
  for (std::size_t u = 0; u < n; ++u) {
    double out = 0.0;
    for (std::size_t v = 0; v < n; ++v) out += weights[u][v];
    for (std::size_t v = 0; v < n; ++v) {
      const double follow = out == 0.0 ? 1.0 / static_cast<double>(n) : weights[u][v] / out;
      google[u][v] = damping * follow + (1.0 - damping) / static_cast<double>(n);
    }
  }
  std::vector<double> r(n, 1.0 / static_cast<double>(n)), next(n);
  for (std::size_t s = 0; s < steps; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) next[v] += r[u] * google[u][v];
    }
    r.swap(next);
  }
  return r;
}

}  // namespace eaims::oracle
