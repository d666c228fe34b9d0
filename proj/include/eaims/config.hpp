#pragma once

// Service configuration: JSON file, documented ranges, resource loading.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "eaims/detection.hpp"
#include "eaims/enrichment.hpp"
#include "eaims/error.hpp"
#include "eaims/event_registry.hpp"
#include "eaims/post.hpp"
#include "eaims/text.hpp"

namespace eaims {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;

  std::string gazetteer_path;  // empty: no gazetteer
  std::string lexicon_path;    // empty: no sentiment lexicon
  std::string stopwords_path;  // empty: built-in list

  LshParams fsd;
  double default_threshold = 0.8;

  SensorSettings sensors;
  SentimentParams sentiment;
  CredibilityWeights credibility;

  std::string snapshot_dir;  // empty: snapshots disabled
  double snapshot_interval_s = 0.0;

  void validate() const {
    const auto require = [](bool ok, const char* field, const char* range) {
      if (!ok) {
        throw Error(ErrorCode::invalid_config,
                    std::string(field) + " must be " + range);
      }
    };
    require(port >= 0 && port <= 65535, "listen.port", "in [0, 65535]");
    require(fsd.window >= 1 && fsd.window <= 10'000'000, "fsd.window", "in [1, 10000000]");
    require(fsd.tables >= 1 && fsd.tables <= 256, "fsd.tables", "in [1, 256]");
    require(fsd.bits >= 1 && fsd.bits <= 32, "fsd.bits", "in [1, 32]");
    require(default_threshold >= 0.0 && default_threshold <= 1.0, "fsd.threshold", "in [0, 1]");
    require(sensors.half_life_ms > 0.0, "threads.half_life_hours", "positive");
    require(sensors.bm25.k1 >= 0.0, "search.k1", "non-negative");
    require(sensors.bm25.b >= 0.0 && sensors.bm25.b <= 1.0, "search.b", "in [0, 1]");
    require(sensors.timeline.bucket_ms > 0, "timeline.bucket_seconds", "positive");
    require(sensors.timeline.min_posts >= 1, "timeline.min_posts", ">= 1");
    require(sensors.timeline.novelty_gate > 0.0 && sensors.timeline.novelty_gate <= 1.0,
            "timeline.novelty_gate", "in (0, 1]");
    require(sensors.pagerank.damping > 0.0 && sensors.pagerank.damping < 1.0,
            "influence.damping", "in (0, 1)");
    require(sensors.push_buffer >= 1, "push.buffer", ">= 1");
    require(sentiment.window >= 1, "sentiment.window", ">= 1");
    require(snapshot_interval_s >= 0.0, "snapshot.interval_seconds", "non-negative");
    const auto exists = [](const std::string& path, const char* field) {
      if (!path.empty() && !std::filesystem::exists(path)) {
        throw Error(ErrorCode::invalid_config, std::string(field) + " file not found: " + path);
      }
    };
    exists(gazetteer_path, "gazetteer");
    exists(lexicon_path, "lexicon");
    exists(stopwords_path, "stopwords");
  }

  /// Relative resource paths resolve against `base_dir`.
  static ServiceConfig from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    ServiceConfig c;
    const auto number = [&](const Json& obj, const char* key, auto& out, const char* field) {
      if (!obj.contains(key)) return;
      if (!obj.at(key).is_number()) {
        throw Error(ErrorCode::invalid_config, std::string(field) + " must be a number");
      }
      using T = std::decay_t<decltype(out)>;
      if constexpr (std::is_integral_v<T>) {
        if (!obj.at(key).is_number_integer() || obj.at(key).template get<std::int64_t>() < 0) {
          throw Error(ErrorCode::invalid_config,
                      std::string(field) + " must be a non-negative integer");
        }
      }
      out = obj.at(key).template get<T>();
    };
    const auto section = [&](const char* key) -> const Json& {
      static const Json empty = Json::object();
      if (!j.contains(key)) return empty;
      if (!j.at(key).is_object()) {
        throw Error(ErrorCode::invalid_config, std::string(key) + " must be an object");
      }
      return j.at(key);
    };
    const auto path = [&](const char* key) -> std::string {
      if (!j.contains(key) || j.at(key).is_null()) return {};
      if (!j.at(key).is_string()) {
        throw Error(ErrorCode::invalid_config, std::string(key) + " must be a path string");
      }
      std::filesystem::path p = j.at(key).get<std::string>();
      if (p.empty()) return {};
      return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
    };

    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "config must be a JSON object");
    const Json& listen = section("listen");
    if (listen.contains("host")) c.host = listen.at("host").get<std::string>();
    number(listen, "port", c.port, "listen.port");

    c.gazetteer_path = path("gazetteer");
    c.lexicon_path = path("lexicon");
    c.stopwords_path = path("stopwords");

    const Json& fsd = section("fsd");
    number(fsd, "window", c.fsd.window, "fsd.window");
    number(fsd, "tables", c.fsd.tables, "fsd.tables");
    number(fsd, "bits", c.fsd.bits, "fsd.bits");
    number(fsd, "seed", c.fsd.seed, "fsd.seed");
    number(fsd, "threshold", c.default_threshold, "fsd.threshold");

    const Json& threads = section("threads");
    double half_life_hours = c.sensors.half_life_ms / 3.6e6;
    number(threads, "half_life_hours", half_life_hours, "threads.half_life_hours");
    c.sensors.half_life_ms = half_life_hours * 3.6e6;
    number(threads, "compaction_threshold", c.sensors.compaction_threshold,
           "threads.compaction_threshold");

    const Json& search = section("search");
    number(search, "k1", c.sensors.bm25.k1, "search.k1");
    number(search, "b", c.sensors.bm25.b, "search.b");
    if (search.contains("credibility_weighting")) {
      c.sensors.credibility_weighting = search.at("credibility_weighting").get<bool>();
    }

    const Json& timeline = section("timeline");
    std::int64_t bucket_seconds = c.sensors.timeline.bucket_ms / 1000;
    number(timeline, "bucket_seconds", bucket_seconds, "timeline.bucket_seconds");
    c.sensors.timeline.bucket_ms = bucket_seconds * 1000;
    number(timeline, "min_posts", c.sensors.timeline.min_posts, "timeline.min_posts");
    number(timeline, "novelty_gate", c.sensors.timeline.novelty_gate, "timeline.novelty_gate");

    const Json& influence = section("influence");
    if (influence.contains("method")) {
      const auto m = influence.at("method").get<std::string>();
      if (m == "pagerank") {
        c.sensors.influence = InfluenceMethod::pagerank;
      } else if (m == "degree") {
        c.sensors.influence = InfluenceMethod::degree;
      } else {
        throw Error(ErrorCode::invalid_config, "influence.method must be pagerank or degree");
      }
    }
    number(influence, "damping", c.sensors.pagerank.damping, "influence.damping");

    const Json& sentiment = section("sentiment");
    number(sentiment, "window", c.sentiment.window, "sentiment.window");
    number(sentiment, "negation_lookback", c.sentiment.negation_lookback,
           "sentiment.negation_lookback");

    const Json& cred = section("credibility");
    number(cred, "bias", c.credibility.bias, "credibility.bias");
    number(cred, "url", c.credibility.url, "credibility.url");
    number(cred, "followers", c.credibility.followers, "credibility.followers");
    number(cred, "reposts", c.credibility.reposts, "credibility.reposts");
    number(cred, "length", c.credibility.length, "credibility.length");
    number(cred, "caps", c.credibility.caps, "credibility.caps");
    number(cred, "exclamation", c.credibility.exclamation, "credibility.exclamation");

    const Json& push = section("push");
    number(push, "buffer", c.sensors.push_buffer, "push.buffer");

    const Json& snapshot = section("snapshot");
    if (snapshot.contains("dir") && snapshot.at("dir").is_string()) {
      std::filesystem::path p = snapshot.at("dir").get<std::string>();
      if (!p.empty()) {
        c.snapshot_dir = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
      }
    }
    number(snapshot, "interval_seconds", c.snapshot_interval_s, "snapshot.interval_seconds");

    c.validate();
    return c;
  }

  static ServiceConfig load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::invalid_config, "cannot open config " + file);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::invalid_config, std::string("config is not valid JSON: ") + e.what());
    }
    try {
      return from_json(j, std::filesystem::path(file).parent_path());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::invalid_config, e.what());
    }
  }

  /// Loads gazetteer, lexicon and stopwords into sensor resources.
  std::shared_ptr<const SensorResources> load_resources() const {
    auto r = std::make_shared<SensorResources>();
    r->stopwords = stopwords_path.empty() ? text::StopWords::defaults()
                                          : text::StopWords::load(stopwords_path);
    if (!gazetteer_path.empty()) r->enricher.gazetteer = Gazetteer::load(gazetteer_path);
    if (!lexicon_path.empty()) r->enricher.lexicon = SentimentLexicon::load(lexicon_path);
    r->enricher.sentiment = sentiment;
    r->enricher.weights = credibility;
    r->settings = sensors;
    return r;
  }
};

}  // namespace eaims
