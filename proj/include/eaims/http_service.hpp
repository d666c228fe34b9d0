#pragma once

// HTTP/JSON binding of the Monitor, plus server-sent-event push streams.

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#define CPPHTTPLIB_THREAD_POOL_COUNT 32
#include "httplib.h"

#include "eaims/error.hpp"
#include "eaims/monitor.hpp"

namespace eaims {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_event:
    case ErrorCode::unknown_post:
    case ErrorCode::unknown_topic:
    case ErrorCode::unknown_profile:
      return 404;
    case ErrorCode::already_archived:
      return 409;
    case ErrorCode::io_failure:
    case ErrorCode::corrupt_snapshot:
      return 500;
    default:
      return 400;
  }
}

class HttpService {
 public:
  explicit HttpService(Monitor& monitor, std::string snapshot_dir = {})
      : monitor_(monitor), snapshot_dir_(std::move(snapshot_dir)) {
    routes();
  }

  ~HttpService() { stop(); }

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds without serving yet; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
    } else if (!server_.bind_to_port(host, port)) {
      bound = -1;
    }
    if (bound < 0) {
      throw Error(ErrorCode::bind_failure, "cannot listen on " + host + ":" + std::to_string(port));
    }
    port_ = bound;
    return bound;
  }

  /// Serves on the calling thread until stop().
  void serve() { server_.listen_after_bind(); }

  /// Serves on a background thread.
  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    stopping_ = true;
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  httplib::Server& server() { return server_; }

 private:
  using Request = httplib::Request;
  using Response = httplib::Response;

  void send(Response& res, const Json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Handler>
  auto guarded(Handler handler) {
    return [this, handler](const Request& req, Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        Json body;
        body["error"] = std::string(to_string(e.code()));
        body["message"] = e.what();
        send(res, body, http_status(e.code()));
      } catch (const Json::exception& e) {
        Json body;
        body["error"] = "InvalidArgument";
        body["message"] = e.what();
        send(res, body, 400);
      }
    };
  }

  static std::optional<std::int64_t> int_param(const Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    const auto value = req.get_param_value(name);
    try {
      std::size_t used = 0;
      const auto v = std::stoll(value, &used);
      if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_argument, std::string(name) + " must be an integer");
  }

  static std::size_t limit_param(const Request& req, std::size_t fallback) {
    const auto v = int_param(req, "limit");
    if (!v) return fallback;
    if (*v <= 0) throw Error(ErrorCode::invalid_argument, "limit must be positive");
    return static_cast<std::size_t>(*v);
  }

  static Json parse_body(const Request& req) {
    try {
      return Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::invalid_argument, std::string("body is not JSON: ") + e.what());
    }
  }

  void stream(Response& res, std::shared_ptr<Monitor::Channel::Subscription> sub) {
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, sub, idle = std::chrono::steady_clock::now()](std::size_t,
                                                             httplib::DataSink& sink) mutable {
          if (stopping_ || !sink.is_writable()) return false;
          if (auto msg = sub->next(std::chrono::milliseconds(200))) {
            const std::string frame = "data: " + *msg + "\n\n";
            idle = std::chrono::steady_clock::now();
            return sink.write(frame.data(), frame.size());
          }
          if (sub->closed()) {
            sink.done();
            return true;
          }
          if (std::chrono::steady_clock::now() - idle > std::chrono::seconds(5)) {
            idle = std::chrono::steady_clock::now();
            static constexpr char keepalive[] = ": keepalive\n\n";
            return sink.write(keepalive, sizeof keepalive - 1);
          }
          return true;
        });
  }

  void routes() {
    server_.Get("/api/health", guarded([this](const Request&, Response& res) {
      send(res, monitor_.health());
    }));

    server_.Post("/api/posts", guarded([this](const Request& req, Response& res) {
      const auto report = monitor_.ingest_lines(req.body);
      Json body;
      body["accepted"] = report.accepted;
      body["duplicate"] = report.duplicate;
      body["error_count"] = report.errors.size();
      body["pings"] = report.pings;
      Json errors = Json::array();
      for (const auto& e : report.errors) {
        Json j;
        j["line"] = e.line;
        j["error"] = e.error;
        errors.push_back(std::move(j));
      }
      body["errors"] = std::move(errors);
      send(res, body);
    }));

    server_.Get("/api/profiles", guarded([this](const Request&, Response& res) {
      send(res, monitor_.profiles_json());
    }));
    server_.Post("/api/profiles", guarded([this](const Request& req, Response& res) {
      send(res, to_json(monitor_.add_profile(parse_body(req))), 201);
    }));
    server_.Delete(R"(/api/profiles/([^/]+))", guarded([this](const Request& req, Response& res) {
      monitor_.remove_profile(req.matches[1]);
      res.status = 204;
    }));

    server_.Get("/api/events", guarded([this](const Request&, Response& res) {
      send(res, monitor_.events_json());
    }));
    server_.Post("/api/events", guarded([this](const Request& req, Response& res) {
      send(res, to_json(monitor_.create_event(parse_body(req))), 201);
    }));
    server_.Post(R"(/api/events/([^/]+)/archive)",
                 guarded([this](const Request& req, Response& res) {
                   send(res, to_json(monitor_.archive_event(req.matches[1])));
                 }));

    server_.Get(R"(/api/events/([^/]+)/threads)", guarded([this](const Request& req, Response& res) {
      send(res, monitor_.threads_json(req.matches[1], limit_param(req, 10), int_param(req, "now")));
    }));
    server_.Get(R"(/api/events/([^/]+)/threads/([^/]+))",
                guarded([this](const Request& req, Response& res) {
                  send(res, monitor_.thread_json(req.matches[1], req.matches[2]));
                }));
    server_.Get(R"(/api/events/([^/]+)/search)", guarded([this](const Request& req, Response& res) {
      send(res, monitor_.search_json(req.matches[1], req.get_param_value("q"),
                                     limit_param(req, 20)));
    }));
    server_.Get(R"(/api/events/([^/]+)/influencers)",
                guarded([this](const Request& req, Response& res) {
                  send(res, monitor_.influencers_json(req.matches[1], limit_param(req, 10)));
                }));
    server_.Get(R"(/api/events/([^/]+)/sentiment)",
                guarded([this](const Request& req, Response& res) {
                  const auto bucket = int_param(req, "bucket").value_or(3600);
                  send(res, monitor_.sentiment_json(req.matches[1],
                                                    req.get_param_value("entity"), bucket));
                }));
    server_.Get(R"(/api/events/([^/]+)/timeline)",
                guarded([this](const Request& req, Response& res) {
                  send(res, monitor_.timeline_json(req.matches[1], int_param(req, "now")));
                }));

    server_.Get("/api/tokenize", guarded([this](const Request& req, Response& res) {
      send(res, monitor_.tokenize_json(req.get_param_value("text")));
    }));

    server_.Post("/api/snapshot", guarded([this](const Request& req, Response& res) {
      std::string dir = snapshot_dir_;
      if (!req.body.empty()) {
        const auto body = parse_body(req);
        if (body.contains("dir")) dir = body.at("dir").get<std::string>();
      }
      if (dir.empty()) throw Error(ErrorCode::invalid_argument, "no snapshot directory given");
      Json out;
      out["path"] = monitor_.snapshot(dir).string();
      send(res, out);
    }));

    server_.Get("/stream/pings", guarded([this](const Request&, Response& res) {
      stream(res, monitor_.subscribe_pings());
    }));
    server_.Get(R"(/stream/events/([^/]+)/posts)",
                guarded([this](const Request& req, Response& res) {
                  stream(res, monitor_.subscribe_event(req.matches[1]));
                }));
  }

  Monitor& monitor_;
  std::string snapshot_dir_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  int port_ = -1;
};

}  // namespace eaims
