#pragma once

// The Event Builder: registered events, routing of accepted posts, and the
// per-event sensors (threads, search, analytics, enrichment) they own.

#include <algorithm>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eaims/analytics.hpp"
#include "eaims/detection.hpp"
#include "eaims/enrichment.hpp"
#include "eaims/error.hpp"
#include "eaims/ingest.hpp"
#include "eaims/post.hpp"
#include "eaims/push.hpp"
#include "eaims/search.hpp"
#include "eaims/text.hpp"
#include "eaims/thread_index.hpp"

namespace eaims {

enum class EventStatus { active, archived };

constexpr std::string_view to_string(EventStatus s) {
  return s == EventStatus::active ? "active" : "archived";
}

struct EventConfig {
  std::string id;
  std::string name;
  std::vector<std::string> tracking_terms;
  Timestamp created_at = 0;
  EventStatus status = EventStatus::active;
  std::optional<Timestamp> archived_at;  // stream clock when archived
};

struct SensorSettings {
  double half_life_ms = kDefaultHalfLifeMs;
  std::size_t compaction_threshold = HybridBackend::kDefaultThreshold;
  Bm25Params bm25;
  bool credibility_weighting = false;
  TimelineParams timeline;
  InfluenceMethod influence = InfluenceMethod::pagerank;
  PageRankParams pagerank;
  std::size_t push_buffer = kDefaultPushBuffer;
};

/// Shared, read-only inputs of every sensor.
struct SensorResources {
  text::StopWords stopwords = text::StopWords::defaults();
  Enricher enricher;
  SensorSettings settings;
};

struct ThreadRow {
  std::string post_id;
  std::optional<std::string> author;  // empty for a reply target never seen
  std::optional<Timestamp> timestamp;
  std::string text;
  std::optional<double> credibility;
  std::optional<std::string> link;
};

struct SearchHit {
  SearchResult result;
  Post post;
};

/// All tactical sensors of one event. One writer (the routed delivery
/// sequence); readers take a shared lock and see whole updates only.
class EventSensors {
 public:
  explicit EventSensors(std::shared_ptr<const SensorResources> resources)
      : resources_(std::move(resources)),
        threads_(HybridBackend(resources_->settings.compaction_threshold)),
        search_(resources_->settings.bm25, resources_->settings.credibility_weighting) {}

  void deliver(const Post& post) {
    Stored s;
    s.post = post;
    s.tokens = text::tokenize(post.text);
    s.mentions = extract_entities(s.tokens, resources_->enricher.gazetteer);
    s.credibility = credibility(post, resources_->enricher.weights);
    s.vector = TermVector::from_tokens(s.tokens, resources_->stopwords);

    std::unique_lock lock(mutex_);
    threads_.observe(post);
    search_.add(post.id, post.timestamp, s.credibility.score, s.tokens);
    graph_.add_post(post);
    index_.emplace(post.id, posts_.size());
    posts_.push_back(std::move(s));
  }

  std::size_t post_count() const {
    std::shared_lock lock(mutex_);
    return posts_.size();
  }

  std::vector<Post> posts() const {
    std::shared_lock lock(mutex_);
    std::vector<Post> out;
    out.reserve(posts_.size());
    for (const auto& s : posts_) out.push_back(s.post);
    return out;
  }

  std::optional<Post> find_post(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return posts_[it->second].post;
  }

  Thread thread_of(const std::string& id, std::optional<Timestamp> now = std::nullopt) const {
    std::shared_lock lock(mutex_);
    return threads_.thread_of(id, now, resources_->settings.half_life_ms);
  }

  std::vector<Thread> top_threads(std::size_t k, Timestamp now) const {
    std::shared_lock lock(mutex_);
    return threads_.top_threads(k, now, resources_->settings.half_life_ms);
  }

  /// Members of the thread containing `id`, ordered by timestamp; reply
  /// targets never seen come first.
  std::vector<ThreadRow> thread_stats(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const Thread thread = threads_.thread_of(id);
    std::vector<ThreadRow> rows;
    rows.reserve(thread.size);
    for (const auto& member : thread.member_ids) {
      ThreadRow row;
      row.post_id = member;
      if (auto it = index_.find(member); it != index_.end()) {
        const Stored& s = posts_[it->second];
        row.author = s.post.author;
        row.timestamp = s.post.timestamp;
        row.text = s.post.text;
        row.credibility = s.credibility.score;
        row.link = s.post.link();
      }
      rows.push_back(std::move(row));
    }
    // member_ids are in first-seen order, which breaks timestamp ties.
    std::stable_sort(rows.begin(), rows.end(), [](const ThreadRow& a, const ThreadRow& b) {
      return a.timestamp.value_or(0) < b.timestamp.value_or(0);
    });
    return rows;
  }

  std::vector<SearchHit> search(std::string_view query, std::size_t k) const {
    std::shared_lock lock(mutex_);
    std::vector<SearchHit> hits;
    for (auto& r : search_.search(query, k)) {
      hits.push_back(SearchHit{r, posts_[index_.at(r.post_id)].post});
    }
    return hits;
  }

  std::vector<InfluenceScore> influencers(std::size_t k) const {
    std::shared_lock lock(mutex_);
    return top_influencers(graph_, k, resources_->settings.influence,
                           resources_->settings.pagerank);
  }

  std::vector<SentimentBucket> sentiment_series(const std::string& entity,
                                                Timestamp bucket_ms) const {
    std::shared_lock lock(mutex_);
    std::vector<SentimentObservation> obs;
    obs.reserve(posts_.size());
    for (const auto& s : posts_) {
      obs.push_back(SentimentObservation{
          s.post.timestamp,
          target_sentiment(s.tokens, s.mentions, entity, resources_->enricher.lexicon,
                           resources_->enricher.sentiment)});
    }
    return bucket_sentiment(obs, entity, bucket_ms);
  }

  std::vector<TimelineEntry> timeline(Timestamp start, Timestamp now) const {
    std::shared_lock lock(mutex_);
    std::vector<TimelinePost> posts;
    posts.reserve(posts_.size());
    for (const auto& s : posts_) {
      posts.push_back(TimelinePost{&s.post, &s.vector, s.credibility.score});
    }
    return build_timeline(posts, start, now, resources_->settings.timeline);
  }

  std::optional<Timestamp> earliest_timestamp() const {
    std::shared_lock lock(mutex_);
    std::optional<Timestamp> out;
    for (const auto& s : posts_) {
      if (!out || s.post.timestamp < *out) out = s.post.timestamp;
    }
    return out;
  }

  std::size_t thread_count() const {
    std::shared_lock lock(mutex_);
    return threads_.thread_count();
  }

  const SensorResources& resources() const { return *resources_; }

 private:
  struct Stored {
    Post post;
    std::vector<std::string> tokens;
    std::vector<EntityMention> mentions;
    Credibility credibility;
    TermVector vector;
  };

  std::shared_ptr<const SensorResources> resources_;
  mutable std::shared_mutex mutex_;
  std::vector<Stored> posts_;
  std::unordered_map<std::string, std::size_t> index_;
  ThreadIndex<HybridBackend> threads_;
  TextIndex search_;
  InteractionGraph graph_;
};

struct Event {
  Event(EventConfig c, std::shared_ptr<const SensorResources> resources)
      : config(std::move(c)),
        sensors(resources),
        channel(resources->settings.push_buffer) {}

  EventConfig config;  // guarded by the registry lock
  EventSensors sensors;
  BroadcastChannel<std::string> channel;
};

class EventRegistry {
 public:
  explicit EventRegistry(std::shared_ptr<const SensorResources> resources)
      : resources_(std::move(resources)) {}

  /// Registers an active event with fresh, empty sensors. Events only see
  /// posts routed after they are created.
  EventConfig create_event(std::string name, std::span<const std::string> tracking_terms,
                           Timestamp created_at, std::optional<std::string> id = std::nullopt) {
    auto terms = normalize_terms(tracking_terms);
    if (terms.empty()) throw Error(ErrorCode::empty_terms, "tracking_terms must be nonempty");
    std::unique_lock lock(mutex_);
    std::string event_id = id ? *id : "evt-" + std::to_string(next_id_);
    if (by_id_.count(event_id) != 0) {
      throw Error(ErrorCode::invalid_argument, "duplicate event id " + event_id);
    }
    ++next_id_;
    EventConfig config{event_id, std::move(name), std::move(terms), created_at,
                       EventStatus::active, std::nullopt};
    auto event = std::make_shared<Event>(config, resources_);
    by_id_.emplace(event_id, event);
    order_.push_back(event);
    return config;
  }

  /// Delivers the post to every active event whose terms it matches and
  /// returns their ids in registration order.
  std::vector<std::string> route(const Post& post) {
    const auto tokens = text::tokenize(post.text);
    return route(post, tokens);
  }

  std::vector<std::string> route(const Post& post, std::span<const std::string> tokens) {
    std::shared_lock lock(mutex_);
    std::vector<std::string> delivered;
    std::optional<std::string> wire;
    for (const auto& event : order_) {
      if (event->config.status != EventStatus::active) continue;
      if (!matches_terms(tokens, event->config.tracking_terms)) continue;
      event->sensors.deliver(post);
      if (!wire) wire = serialize_post(post);
      event->channel.publish(*wire);
      delivered.push_back(event->config.id);
    }
    return delivered;
  }

  EventConfig archive_event(const std::string& id, std::optional<Timestamp> at = std::nullopt) {
    std::unique_lock lock(mutex_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error(ErrorCode::unknown_event, id);
    if (it->second->config.status == EventStatus::archived) {
      throw Error(ErrorCode::already_archived, id);
    }
    it->second->config.status = EventStatus::archived;
    it->second->config.archived_at = at;
    it->second->channel.close();
    return it->second->config;
  }

  std::vector<EventConfig> list() const {
    std::shared_lock lock(mutex_);
    std::vector<EventConfig> out;
    for (const auto& e : order_) out.push_back(e->config);
    return out;
  }

  std::shared_ptr<Event> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : it->second;
  }

  std::shared_ptr<Event> get(const std::string& id) const {
    auto e = find(id);
    if (!e) throw Error(ErrorCode::unknown_event, id);
    return e;
  }

  std::optional<EventConfig> config(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second->config;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return order_.size();
  }

  std::uint64_t next_id() const {
    std::shared_lock lock(mutex_);
    return next_id_;
  }

  void set_next_id(std::uint64_t next) {
    std::unique_lock lock(mutex_);
    next_id_ = next;
  }

  /// Restores an archived event (used when loading a snapshot).
  void mark_archived(const std::string& id, std::optional<Timestamp> at) {
    std::unique_lock lock(mutex_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error(ErrorCode::unknown_event, id);
    it->second->config.status = EventStatus::archived;
    it->second->config.archived_at = at;
    it->second->channel.close();
  }

 private:
  std::shared_ptr<const SensorResources> resources_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<Event>> by_id_;
  std::vector<std::shared_ptr<Event>> order_;
  std::uint64_t next_id_ = 1;
};

}  // namespace eaims
