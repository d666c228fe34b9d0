// eaims command-line entry point.
//
//   eaims serve --config <path>
//   eaims replay --file <path> --speed <x|max> --endpoint <url>
//   eaims snapshot --dir <path> [--endpoint <url>]

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "eaims/http_service.hpp"
#include "eaims/ingest.hpp"
#include "eaims/monitor.hpp"

namespace {

std::atomic<bool> g_stop{false};
eaims::HttpService* g_service = nullptr;

void on_signal(int) {
  g_stop = true;
  if (g_service) g_service->stop();
}

int run_serve(const std::string& config_path) {
  auto config = eaims::ServiceConfig::load(config_path);
  eaims::Monitor monitor(config);
  if (!config.snapshot_dir.empty() && monitor.restore(config.snapshot_dir)) {
    std::cerr << "restored snapshot from " << config.snapshot_dir << " ("
              << monitor.accepted_count() << " posts, " << monitor.registry().size()
              << " events)\n";
  }

  eaims::HttpService service(monitor, config.snapshot_dir);
  const int port = service.bind(config.host, config.port);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  std::mutex m;
  std::condition_variable cv;
  std::thread snapshotter;
  if (!config.snapshot_dir.empty() && config.snapshot_interval_s > 0.0) {
    snapshotter = std::thread([&] {
      const auto interval = std::chrono::duration<double>(config.snapshot_interval_s);
      std::unique_lock lock(m);
      while (!cv.wait_for(lock, interval, [] { return g_stop.load(); })) {
        try {
          monitor.snapshot(config.snapshot_dir);
        } catch (const eaims::Error& e) {
          // Retried on the next tick; the service keeps running.
          std::cerr << "snapshot failed: " << e.what() << "\n";
        }
      }
    });
  }

  std::cerr << "listening on " << config.host << ":" << port << "\n";
  service.serve();
  g_stop = true;
  cv.notify_all();
  if (snapshotter.joinable()) snapshotter.join();
  g_service = nullptr;
  return 0;
}

int run_replay(const std::string& file, const std::string& speed_arg,
               const std::string& endpoint) {
  const double speed = eaims::parse_speed(speed_arg);
  httplib::Client client(endpoint);
  client.set_read_timeout(60, 0);

  std::size_t accepted = 0, duplicate = 0, rejected = 0;
  std::string batch;
  std::size_t batched = 0;
  const std::size_t batch_limit = std::isfinite(speed) ? 1 : 500;

  const auto flush = [&] {
    if (batched == 0) return;
    auto res = client.Post("/api/posts", batch, "application/x-ndjson");
    if (!res) {
      throw eaims::Error(eaims::ErrorCode::io_failure,
                         "POST " + endpoint + "/api/posts failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw eaims::Error(eaims::ErrorCode::io_failure,
                         "server answered " + std::to_string(res->status) + ": " + res->body);
    }
    const auto body = eaims::Json::parse(res->body);
    accepted += body.at("accepted").get<std::size_t>();
    duplicate += body.at("duplicate").get<std::size_t>();
    rejected += body.at("error_count").get<std::size_t>();
    batch.clear();
    batched = 0;
  };

  eaims::Replayer replayer(speed);
  const auto stats = replayer.run_file(file, [&](const eaims::Post& post) {
    batch += eaims::serialize_post(post);
    batch += '\n';
    if (++batched >= batch_limit) flush();
  });
  flush();

  std::cout << "emitted " << stats.emitted << ", out-of-order skipped " << stats.out_of_order
            << ", malformed " << stats.malformed << "; server accepted " << accepted
            << ", duplicate " << duplicate << ", rejected " << rejected << "\n";
  return 0;
}

int run_snapshot(const std::string& dir, const std::string& endpoint) {
  httplib::Client client(endpoint);
  eaims::Json body;
  body["dir"] = dir;
  auto res = client.Post("/api/snapshot", body.dump(), "application/json");
  if (!res) {
    std::cerr << "snapshot request failed: " << httplib::to_string(res.error()) << "\n";
    return 1;
  }
  if (res->status != 200) {
    std::cerr << "server answered " << res->status << ": " << res->body << "\n";
    return 1;
  }
  std::cout << eaims::Json::parse(res->body).at("path").get<std::string>() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social-media emergency monitoring service"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", config_path, "Service configuration (JSON)")->required();

  std::string file, speed = "max", endpoint = "http://127.0.0.1:8080";
  auto* replay = app.add_subcommand("replay", "Replay a JSONL post file into a running service");
  replay->add_option("--file", file, "Wire-format post file")->required();
  replay->add_option("--speed", speed, "Time multiplier, or 'max'");
  replay->add_option("--endpoint", endpoint, "Service base URL");

  std::string dir;
  auto* snap = app.add_subcommand("snapshot", "Ask a running service to write a snapshot");
  snap->add_option("--dir", dir, "Snapshot directory")->required();
  snap->add_option("--endpoint", endpoint, "Service base URL");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return run_serve(config_path);
    if (*replay) return run_replay(file, speed, endpoint);
    if (*snap) return run_snapshot(dir, endpoint);
  } catch (const eaims::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
