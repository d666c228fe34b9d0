#pragma once

// Platform-independent post record and its JSONL wire format.
//
// Field names on the wire: id, author, ts, text, reply_to, repost_of, lat,
// lon, followers, reposts, platform, urls. Unknown fields are ignored.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eaims/error.hpp"
#include "eaims/text.hpp"
#include "json.hpp"

namespace eaims {

using Json = nlohmann::ordered_json;
using Timestamp = std::int64_t;  // UTC milliseconds since epoch

struct Geo {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const Geo&) const = default;
};

struct Post {
  std::string id;
  std::string author;
  Timestamp timestamp = 0;
  std::string text;
  std::optional<std::string> reply_to;
  std::optional<std::string> repost_of;
  std::optional<Geo> geo;
  std::optional<std::int64_t> followers;
  std::optional<std::int64_t> reposts;
  std::string platform;
  std::vector<std::string> urls;

  /// The conversational link used for threading; replies win over reposts.
  const std::optional<std::string>& link() const { return reply_to ? reply_to : repost_of; }

  bool operator==(const Post&) const = default;
};

namespace detail {

inline std::optional<std::string> optional_id(const Json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::malformed_record, std::string(field) + " must be a string");
  }
  auto value = it->get<std::string>();
  if (value.empty()) return std::nullopt;
  return value;
}

inline std::optional<std::int64_t> optional_count(const Json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw Error(ErrorCode::malformed_record,
                std::string(field) + " must be a non-negative integer");
  }
  return it->get<std::int64_t>();
}

inline std::optional<double> optional_coordinate(const Json& record, const char* field,
                                                 double bound) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw Error(ErrorCode::malformed_record, std::string(field) + " must be a number");
  }
  const double v = it->get<double>();
  if (!(v >= -bound && v <= bound)) {
    throw Error(ErrorCode::malformed_record, std::string(field) + " out of range");
  }
  return v;
}

inline std::string required_string(const Json& record, const char* field,
                                   const char* field_label) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    throw Error(ErrorCode::missing_field, field_label);
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::malformed_record, std::string(field) + " must be a string");
  }
  auto value = it->get<std::string>();
  if (value.empty()) throw Error(ErrorCode::missing_field, field_label);
  return value;
}

}  // namespace detail

/// Maps a decoded wire object onto a Post, validating every invariant.
inline Post post_from_json(const Json& record) {
  if (!record.is_object()) throw Error(ErrorCode::malformed_record, "record is not an object");

  Post post;
  post.id = detail::required_string(record, "id", "post_id");
  post.author = detail::required_string(record, "author", "author_id");

  auto ts = record.find("ts");
  if (ts == record.end() || ts->is_null()) throw Error(ErrorCode::missing_field, "timestamp");
  if (!ts->is_number_integer()) throw Error(ErrorCode::malformed_record, "ts must be an integer");
  post.timestamp = ts->get<Timestamp>();
  if (post.timestamp <= 0) throw Error(ErrorCode::malformed_record, "ts must be positive");

  if (auto text = record.find("text"); text != record.end() && !text->is_null()) {
    if (!text->is_string()) throw Error(ErrorCode::malformed_record, "text must be a string");
    post.text = text::normalize_nfc(text->get<std::string>());
  }

  post.reply_to = detail::optional_id(record, "reply_to");
  post.repost_of = detail::optional_id(record, "repost_of");
  if (post.reply_to == post.id || post.repost_of == post.id) {
    throw Error(ErrorCode::self_reference, "post " + post.id + " links to itself");
  }

  auto lat = detail::optional_coordinate(record, "lat", 90.0);
  auto lon = detail::optional_coordinate(record, "lon", 180.0);
  if (lat.has_value() != lon.has_value()) {
    throw Error(ErrorCode::malformed_record, "lat and lon must be given together");
  }
  if (lat) post.geo = Geo{*lat, *lon};

  post.followers = detail::optional_count(record, "followers");
  post.reposts = detail::optional_count(record, "reposts");

  if (auto platform = record.find("platform"); platform != record.end() && !platform->is_null()) {
    if (!platform->is_string()) {
      throw Error(ErrorCode::malformed_record, "platform must be a string");
    }
    post.platform = platform->get<std::string>();
  }

  if (auto urls = record.find("urls"); urls != record.end() && !urls->is_null()) {
    if (!urls->is_array()) throw Error(ErrorCode::malformed_record, "urls must be a list");
    for (const auto& url : *urls) {
      if (!url.is_string()) throw Error(ErrorCode::malformed_record, "urls must hold strings");
      post.urls.push_back(url.get<std::string>());
    }
  }
  return post;
}

inline Post parse_post(std::string_view line) {
  Json record;
  try {
    record = Json::parse(line.begin(), line.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::malformed_record, e.what());
  }
  return post_from_json(record);
}

inline Json to_json(const Post& post) {
  Json out;
  out["id"] = post.id;
  out["author"] = post.author;
  out["ts"] = post.timestamp;
  out["text"] = post.text;
  if (post.reply_to) out["reply_to"] = *post.reply_to;
  if (post.repost_of) out["repost_of"] = *post.repost_of;
  if (post.geo) {
    out["lat"] = post.geo->lat;
    out["lon"] = post.geo->lon;
  }
  if (post.followers) out["followers"] = *post.followers;
  if (post.reposts) out["reposts"] = *post.reposts;
  out["platform"] = post.platform;
  if (!post.urls.empty()) out["urls"] = post.urls;
  return out;
}

/// One wire-format line, without the trailing newline.
inline std::string serialize_post(const Post& post) { return to_json(post).dump(); }

}  // namespace eaims
