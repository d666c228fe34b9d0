#pragma once

// The monitoring pipeline without transport: ordered ingestion (dedup,
// first-story detection, event routing), profile and event management, the
// JSON views served by the HTTP layer, and snapshot/restore.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eaims/config.hpp"
#include "eaims/detection.hpp"
#include "eaims/error.hpp"
#include "eaims/event_registry.hpp"
#include "eaims/ingest.hpp"
#include "eaims/post.hpp"
#include "eaims/push.hpp"
#include "eaims/snapshot.hpp"

namespace eaims {

struct IngestError {
  std::size_t line = 0;  // 1-based
  std::string error;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t duplicate = 0;
  std::size_t pings = 0;
  std::vector<IngestError> errors;
};

inline Timestamp wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline Json to_json(const TrackingProfile& p) {
  Json j;
  j["profile_id"] = p.id;
  j["name"] = p.name;
  j["event_type"] = p.event_type;
  j["keywords"] = p.keywords;
  j["novelty_threshold"] = p.novelty_threshold;
  return j;
}

inline Json to_json(const EventConfig& e) {
  Json j;
  j["id"] = e.id;
  j["name"] = e.name;
  j["tracking_terms"] = e.tracking_terms;
  j["created_at"] = e.created_at;
  j["status"] = std::string(to_string(e.status));
  if (e.archived_at) j["archived_at"] = *e.archived_at;
  return j;
}

inline Json ping_message(const Post& post, const PingAlert& ping) {
  Json j = to_json(post);
  j["novelty"] = ping.novelty;
  j["profile_id"] = ping.profile_id;
  return j;
}

class Monitor {
 public:
  using Channel = BroadcastChannel<std::string>;

  explicit Monitor(ServiceConfig config)
      : Monitor(config, config.load_resources()) {}

  Monitor(ServiceConfig config, std::shared_ptr<const SensorResources> resources)
      : config_(std::move(config)),
        resources_(std::move(resources)),
        detector_(config_.fsd, resources_->stopwords),
        registry_(resources_),
        pings_(config_.sensors.push_buffer) {}

  // ---- ingestion ------------------------------------------------------

  Acceptance ingest(const Post& post, std::size_t* pings_emitted = nullptr) {
    std::lock_guard lock(ingest_mutex_);
    return ingest_locked(post, pings_emitted);
  }

  /// One wire record per line; blank lines are skipped. Parsing happens
  /// before the pipeline lock is taken.
  IngestReport ingest_lines(std::string_view body) {
    IngestReport report;
    std::vector<Post> parsed;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= body.size()) {
      const auto end = std::min(body.find('\n', pos), body.size());
      const auto line = body.substr(pos, end - pos);
      ++line_no;
      pos = end + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      try {
        parsed.push_back(parse_post(line));
      } catch (const Error& e) {
        report.errors.push_back(IngestError{line_no, e.what()});
      }
    }
    std::lock_guard lock(ingest_mutex_);
    for (const auto& post : parsed) {
      std::size_t pings = 0;
      if (ingest_locked(post, &pings) == Acceptance::accepted) {
        ++report.accepted;
      } else {
        ++report.duplicate;
      }
      report.pings += pings;
    }
    return report;
  }

  // ---- profiles -------------------------------------------------------

  TrackingProfile add_profile(const Json& body) {
    if (!body.is_object()) throw Error(ErrorCode::invalid_argument, "profile must be an object");
    const auto keywords = string_list(body, "keywords");
    std::lock_guard lock(ingest_mutex_);
    std::string id = body.value("profile_id", std::string());
    if (id.empty()) id = "prof-" + std::to_string(next_profile_id_);
    for (const auto& p : profiles_) {
      if (p.id == id) throw Error(ErrorCode::invalid_argument, "duplicate profile id " + id);
    }
    double threshold = config_.default_threshold;
    if (body.contains("novelty_threshold")) {
      if (!body.at("novelty_threshold").is_number()) {
        throw Error(ErrorCode::invalid_argument, "novelty_threshold must be a number");
      }
      threshold = body.at("novelty_threshold").get<double>();
    }
    auto profile = make_profile(id, body.value("name", std::string()),
                                body.value("event_type", std::string()), keywords, threshold);
    ++next_profile_id_;
    std::unique_lock plock(profiles_mutex_);
    profiles_.push_back(profile);
    return profile;
  }

  void remove_profile(const std::string& id) {
    std::lock_guard lock(ingest_mutex_);
    std::unique_lock plock(profiles_mutex_);
    const auto removed = std::erase_if(profiles_, [&](const auto& p) { return p.id == id; });
    if (removed == 0) throw Error(ErrorCode::unknown_profile, id);
  }

  std::vector<TrackingProfile> profiles() const {
    std::shared_lock lock(profiles_mutex_);
    return profiles_;
  }

  // ---- events ---------------------------------------------------------

  EventConfig create_event(const Json& body) {
    if (!body.is_object()) throw Error(ErrorCode::invalid_argument, "event must be an object");
    return create_event(body.value("name", std::string()), string_list(body, "tracking_terms"));
  }

  EventConfig create_event(std::string name, std::span<const std::string> terms) {
    std::lock_guard lock(ingest_mutex_);
    const Timestamp now = clock_.load();
    const Timestamp created = now > 0 ? now : wall_clock_ms();
    return registry_.create_event(std::move(name), terms, created);
  }

  EventConfig archive_event(const std::string& id) {
    std::lock_guard lock(ingest_mutex_);
    return registry_.archive_event(id, clock_.load());
  }

  // ---- read views -----------------------------------------------------

  Json health() const {
    Json j;
    j["status"] = "healthy";
    j["accepted"] = accepted_count();
    j["events"] = registry_.size();
    j["profiles"] = profiles().size();
    return j;
  }

  Json profiles_json() const {
    Json out = Json::array();
    for (const auto& p : profiles()) out.push_back(to_json(p));
    return out;
  }

  Json events_json() const {
    Json out = Json::array();
    for (const auto& cfg : registry_.list()) {
      Json j = to_json(cfg);
      j["posts"] = registry_.get(cfg.id)->sensors.post_count();
      out.push_back(std::move(j));
    }
    return out;
  }

  Json threads_json(const std::string& event_id, std::size_t limit,
                    std::optional<Timestamp> now = std::nullopt) const {
    auto event = registry_.get(event_id);
    const Timestamp at = now ? *now : query_clock(event_id);
    Json threads = Json::array();
    for (const auto& t : event->sensors.top_threads(limit, at)) {
      Json j;
      j["root_id"] = t.root_id;
      j["size"] = t.size;
      if (t.last_activity) j["last_activity"] = *t.last_activity;
      j["activity_score"] = t.activity_score;
      if (auto root = event->sensors.find_post(t.root_id)) {
        j["author"] = root->author;
        j["text"] = root->text;
      }
      threads.push_back(std::move(j));
    }
    Json out;
    out["event_id"] = event_id;
    out["now"] = at;
    out["threads"] = std::move(threads);
    return out;
  }

  Json thread_json(const std::string& event_id, const std::string& root_id) const {
    auto event = registry_.get(event_id);
    const auto thread = event->sensors.thread_of(root_id);
    Json rows = Json::array();
    for (const auto& r : event->sensors.thread_stats(root_id)) {
      Json j;
      j["id"] = r.post_id;
      if (r.author) j["author"] = *r.author;
      if (r.timestamp) j["ts"] = *r.timestamp;
      j["text"] = r.text;
      if (r.credibility) j["credibility"] = *r.credibility;
      if (r.link) j["reply_to"] = *r.link;
      rows.push_back(std::move(j));
    }
    Json out;
    out["event_id"] = event_id;
    out["root_id"] = thread.root_id;
    out["size"] = thread.size;
    out["rows"] = std::move(rows);
    return out;
  }

  Json search_json(const std::string& event_id, std::string_view query,
                   std::size_t limit) const {
    auto event = registry_.get(event_id);
    Json results = Json::array();
    for (const auto& hit : event->sensors.search(query, limit)) {
      Json j = to_json(hit.post);
      j["score"] = hit.result.relevance;
      j["credibility"] = hit.result.credibility;
      results.push_back(std::move(j));
    }
    Json out;
    out["event_id"] = event_id;
    out["query"] = std::string(query);
    out["results"] = std::move(results);
    return out;
  }

  Json influencers_json(const std::string& event_id, std::size_t limit) const {
    auto event = registry_.get(event_id);
    Json list = Json::array();
    for (const auto& s : event->sensors.influencers(limit)) {
      Json j;
      j["author"] = s.author_id;
      j["score"] = s.score;
      if (s.followers) j["followers"] = *s.followers;
      list.push_back(std::move(j));
    }
    Json out;
    out["event_id"] = event_id;
    out["influencers"] = std::move(list);
    return out;
  }

  Json sentiment_json(const std::string& event_id, const std::string& entity,
                      std::int64_t bucket_seconds) const {
    if (bucket_seconds <= 0) throw Error(ErrorCode::invalid_argument, "bucket must be positive");
    auto event = registry_.get(event_id);
    Json buckets = Json::array();
    for (const auto& b : event->sensors.sentiment_series(entity, bucket_seconds * 1000)) {
      Json j;
      j["bucket_start"] = b.bucket_start;
      j["entity"] = b.entity;
      j["mean_polarity"] = b.mean_polarity;
      j["mention_count"] = b.mention_count;
      j["signal_count"] = b.signal_count;
      buckets.push_back(std::move(j));
    }
    Json out;
    out["event_id"] = event_id;
    out["entity"] = entity;
    out["bucket_seconds"] = bucket_seconds;
    out["buckets"] = std::move(buckets);
    return out;
  }

  Json timeline_json(const std::string& event_id,
                     std::optional<Timestamp> now = std::nullopt) const {
    auto event = registry_.get(event_id);
    const auto cfg = *registry_.config(event_id);
    const Timestamp at = now ? *now : query_clock(event_id);
    Json entries = Json::array();
    // Buckets align to creation unless delivered posts predate it.
    const Timestamp start = std::min(cfg.created_at,
                                     event->sensors.earliest_timestamp().value_or(cfg.created_at));
    for (const auto& e : event->sensors.timeline(start, at)) {
      Json j;
      j["bucket_start"] = e.bucket_start;
      j["id"] = e.post_id;
      j["headline"] = e.headline;
      entries.push_back(std::move(j));
    }
    Json out;
    out["event_id"] = event_id;
    out["now"] = at;
    out["entries"] = std::move(entries);
    return out;
  }

  Json tokenize_json(std::string_view text) const {
    Json out;
    out["tokens"] = text::tokenize(text);
    Json terms = Json::array();
    const TermVector v = vectorize(text, resources_->stopwords);
    for (const auto& [term, w] : v.entries()) {
      terms.push_back(term);
    }
    out["terms"] = std::move(terms);
    return out;
  }

  // ---- push channels --------------------------------------------------

  std::shared_ptr<Channel::Subscription> subscribe_pings() { return pings_.subscribe(); }

  std::shared_ptr<Channel::Subscription> subscribe_event(const std::string& event_id) {
    auto event = registry_.find(event_id);
    if (!event) throw Error(ErrorCode::unknown_topic, "events/" + event_id + "/posts");
    return event->channel.subscribe();
  }

  Channel& ping_channel() { return pings_; }

  // ---- snapshots ------------------------------------------------------

  /// Profiles, event configs and accepted-post logs. Derived indexes are
  /// rebuilt from the logs on restore.
  snapshot::Files snapshot_files() const {
    std::lock_guard lock(ingest_mutex_);
    snapshot::Files files;
    Json manifest;
    manifest["format"] = 1;
    manifest["stream_clock"] = clock_.load();
    manifest["next_profile_id"] = next_profile_id_;
    manifest["next_event_id"] = registry_.next_id();
    manifest["profiles"] = profiles_json();
    Json events = Json::array();
    for (const auto& cfg : registry_.list()) {
      events.push_back(to_json(cfg));
      std::string log;
      for (const auto& post : registry_.get(cfg.id)->sensors.posts()) {
        log += serialize_post(post);
        log += '\n';
      }
      files["events/" + cfg.id + ".jsonl"] = std::move(log);
    }
    manifest["events"] = std::move(events);
    Json window = Json::array();
    for (const auto& entry : detector_.window().entries()) window.push_back(entry.post_id);
    manifest["fsd_window"] = std::move(window);
    files["manifest.json"] = manifest.dump(2) + "\n";

    std::string log;
    for (const auto& post : accepted_) {
      log += serialize_post(post);
      log += '\n';
    }
    files["posts.jsonl"] = std::move(log);
    return files;
  }

  std::filesystem::path snapshot(const std::filesystem::path& dir) const {
    return snapshot::write(dir, snapshot_files());
  }

  /// Loads the newest snapshot under `dir` into this (fresh) monitor.
  /// Returns false when there is none.
  bool restore(const std::filesystem::path& dir) {
    const auto snap = snapshot::latest(dir);
    if (!snap) return false;
    restore_files(*snap);
    return true;
  }

  void restore_files(const std::filesystem::path& snap) {
    std::lock_guard lock(ingest_mutex_);
    if (dedup_.accepted_count() != 0 || registry_.size() != 0) {
      throw Error(ErrorCode::invalid_argument, "restore requires an empty monitor");
    }
    const auto manifest_path = snap / "manifest.json";
    Json manifest;
    try {
      manifest = Json::parse(snapshot::read_file(manifest_path));
      if (manifest.at("format").get<int>() != 1) throw std::runtime_error("unknown format");

      std::unique_lock plock(profiles_mutex_);
      for (const auto& p : manifest.at("profiles")) {
        profiles_.push_back(make_profile(
            p.at("profile_id").get<std::string>(), p.at("name").get<std::string>(),
            p.at("event_type").get<std::string>(),
            p.at("keywords").get<std::vector<std::string>>(),
            p.at("novelty_threshold").get<double>()));
      }
      plock.unlock();
      next_profile_id_ = manifest.at("next_profile_id").get<std::uint64_t>();
      clock_.store(manifest.at("stream_clock").get<Timestamp>());
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::corrupt_snapshot, manifest_path.string() + ": " + e.what());
    }

    std::unordered_map<std::string, std::size_t> position;
    for_each_logged_post(snap / "posts.jsonl", [&](Post post) {
      if (dedup_.accept(post) == Acceptance::duplicate) {
        throw Error(ErrorCode::corrupt_snapshot, "duplicate post " + post.id);
      }
      position.emplace(post.id, accepted_.size());
      accepted_.push_back(std::move(post));
    });
    accepted_count_.store(accepted_.size());

    try {
      for (const auto& id : manifest.at("fsd_window")) {
        auto it = position.find(id.get<std::string>());
        if (it == position.end()) throw std::runtime_error("window post not in log");
        detector_.remember(accepted_[it->second]);
      }
      for (const auto& e : manifest.at("events")) {
        const auto id = e.at("id").get<std::string>();
        const auto terms = e.at("tracking_terms").get<std::vector<std::string>>();
        registry_.create_event(e.at("name").get<std::string>(), terms,
                               e.at("created_at").get<Timestamp>(), id);
        auto event = registry_.get(id);
        for_each_logged_post(snap / "events" / (id + ".jsonl"),
                             [&](Post post) { event->sensors.deliver(post); });
        if (e.at("status").get<std::string>() == "archived") {
          std::optional<Timestamp> at;
          if (e.contains("archived_at")) at = e.at("archived_at").get<Timestamp>();
          registry_.mark_archived(id, at);
        }
      }
      registry_.set_next_id(manifest.at("next_event_id").get<std::uint64_t>());
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::corrupt_snapshot, manifest_path.string() + ": " + e.what());
    }
  }

  // ---- accessors ------------------------------------------------------

  std::size_t accepted_count() const { return accepted_count_.load(); }

  /// Largest accepted timestamp; read without taking the pipeline lock.
  Timestamp stream_clock() const { return clock_.load(); }

  const EventRegistry& registry() const { return registry_; }
  const ServiceConfig& config() const { return config_; }
  const SensorResources& resources() const { return *resources_; }

  template <typename Fn>
  void with_detector(Fn&& fn) const {
    std::lock_guard lock(ingest_mutex_);
    fn(detector_);
  }

 private:
  Acceptance ingest_locked(const Post& post, std::size_t* pings_emitted) {
    if (dedup_.accept(post) == Acceptance::duplicate) return Acceptance::duplicate;
    accepted_.push_back(post);
    accepted_count_.store(accepted_.size());
    if (post.timestamp > clock_.load()) clock_.store(post.timestamp);
    const auto pings = detector_.detect(post, profiles_);
    for (const auto& ping : pings) pings_.publish(ping_message(post, ping).dump());
    if (pings_emitted) *pings_emitted = pings.size();
    registry_.route(post);
    return Acceptance::accepted;
  }

  /// Archived events answer at the clock they were archived with.
  Timestamp query_clock(const std::string& event_id) const {
    const auto cfg = registry_.config(event_id);
    if (cfg && cfg->archived_at) return *cfg->archived_at;
    return stream_clock();
  }

  template <typename Fn>
  static void for_each_logged_post(const std::filesystem::path& file, Fn&& fn) {
    std::istringstream in(snapshot::read_file(file));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        fn(parse_post(line));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::corrupt_snapshot) throw;
        throw Error(ErrorCode::corrupt_snapshot,
                    file.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  static std::vector<std::string> string_list(const Json& body, const char* key) {
    if (!body.contains(key)) return {};
    const auto& v = body.at(key);
    if (!v.is_array()) throw Error(ErrorCode::invalid_argument, std::string(key) + " must be a list");
    std::vector<std::string> out;
    for (const auto& item : v) {
      if (!item.is_string()) {
        throw Error(ErrorCode::invalid_argument, std::string(key) + " must hold strings");
      }
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  ServiceConfig config_;
  std::shared_ptr<const SensorResources> resources_;

  mutable std::mutex ingest_mutex_;  // the single ordered pipeline
  Deduplicator dedup_;
  std::vector<Post> accepted_;
  std::atomic<Timestamp> clock_{0};
  std::atomic<std::size_t> accepted_count_{0};
  Detector detector_;

  mutable std::shared_mutex profiles_mutex_;
  std::vector<TrackingProfile> profiles_;
  std::uint64_t next_profile_id_ = 1;

  EventRegistry registry_;
  Channel pings_;
};

}  // namespace eaims
