#pragma once

// Stream intake: deduplication, tracking profiles and the replay driver.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "eaims/error.hpp"
#include "eaims/post.hpp"
#include "eaims/text.hpp"

namespace eaims {

struct TrackingProfile {
  std::string id;
  std::string name;
  std::string event_type;
  std::vector<std::string> keywords;
  double novelty_threshold = 0.8;
};

/// Lowercases, NFC-normalizes and deduplicates a term list, preserving the
/// order of first appearance. Blank terms are dropped.
inline std::vector<std::string> normalize_terms(std::span<const std::string> terms) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& raw : terms) {
    auto term = text::to_lower(text::normalize_nfc(raw));
    const auto first = term.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    term = term.substr(first, term.find_last_not_of(" \t\r\n") - first + 1);
    if (seen.insert(term).second) out.push_back(std::move(term));
  }
  return out;
}

inline TrackingProfile make_profile(std::string id, std::string name, std::string event_type,
                                    std::span<const std::string> keywords,
                                    double novelty_threshold = 0.8) {
  if (id.empty()) throw Error(ErrorCode::invalid_argument, "profile_id must be nonempty");
  if (!(novelty_threshold >= 0.0 && novelty_threshold <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "novelty_threshold must be in [0, 1]");
  }
  return TrackingProfile{std::move(id), std::move(name), std::move(event_type),
                         normalize_terms(keywords), novelty_threshold};
}

/// Whole-token OR match. An empty term list matches nothing.
inline bool matches_terms(std::span<const std::string> tokens,
                          std::span<const std::string> terms) {
  for (const auto& term : terms) {
    for (const auto& token : tokens) {
      if (token == term) return true;
    }
  }
  return false;
}

inline bool matches_profile(const Post& post, const TrackingProfile& profile) {
  if (profile.keywords.empty()) return false;
  const auto tokens = text::tokenize(post.text);
  return matches_terms(tokens, profile.keywords);
}

enum class Acceptance { accepted, duplicate };

/// Serializes acceptance: the first occurrence of an id wins.
class Deduplicator {
 public:
  Acceptance accept(const Post& post) {
    if (!seen_.insert(post.id).second) return Acceptance::duplicate;
    ++accepted_;
    return Acceptance::accepted;
  }

  bool seen(const std::string& id) const { return seen_.count(id) != 0; }
  std::size_t accepted_count() const { return accepted_; }

 private:
  std::unordered_set<std::string> seen_;
  std::size_t accepted_ = 0;
};

struct ReplayStats {
  std::size_t emitted = 0;
  std::size_t out_of_order = 0;
  std::size_t malformed = 0;
};

/// Accepts "max" (unthrottled) or a positive multiplier.
inline double parse_speed(std::string_view value) {
  if (value == "max") return std::numeric_limits<double>::infinity();
  double speed = 0.0;
  try {
    std::size_t used = 0;
    speed = std::stod(std::string(value), &used);
    if (used != value.size()) speed = 0.0;
  } catch (const std::exception&) {
    speed = 0.0;
  }
  if (!(speed > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "speed must be a positive number or 'max'");
  }
  return speed;
}

/// Re-emits a recorded stream with its original pacing scaled by `speed`.
///
/// Records whose timestamp is lower than the last emitted one are skipped and
/// counted, as are lines that fail to parse.
class Replayer {
 public:
  using Gap = std::chrono::duration<double, std::milli>;
  using Pacer = std::function<void(Gap)>;
  using Sink = std::function<void(const Post&)>;

  explicit Replayer(double speed, Pacer pacer = {}) : speed_(speed), pacer_(std::move(pacer)) {
    if (!(speed_ > 0.0)) throw Error(ErrorCode::invalid_argument, "speed must be positive");
  }

  ReplayStats run(std::istream& in, const Sink& sink) {
    ReplayStats stats;
    std::string line;
    bool first = true;
    Timestamp last = 0;
    auto last_emit = std::chrono::steady_clock::now();
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Post post;
      try {
        post = parse_post(line);
      } catch (const Error&) {
        ++stats.malformed;
        continue;
      }
      if (!first && post.timestamp < last) {
        ++stats.out_of_order;
        continue;
      }
      if (!first && std::isfinite(speed_)) {
        const Gap gap{static_cast<double>(post.timestamp - last) / speed_};
        if (pacer_) {
          pacer_(gap);
        } else {
          std::this_thread::sleep_until(
              last_emit + std::chrono::duration_cast<std::chrono::steady_clock::duration>(gap));
        }
      }
      last_emit = std::chrono::steady_clock::now();
      first = false;
      last = post.timestamp;
      sink(post);
      ++stats.emitted;
    }
    return stats;
  }

  ReplayStats run_file(const std::string& path, const Sink& sink) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open replay file " + path);
    return run(in, sink);
  }

 private:
  double speed_;
  Pacer pacer_;
};

}  // namespace eaims
