#pragma once

// On-disk snapshot store.
//
//   <dir>/LATEST              name of the newest complete snapshot
//   <dir>/snap-000007/...     one directory per snapshot
//
// A snapshot directory is fully written under a temporary name, renamed into
// place, and only then published through LATEST (itself replaced by rename),
// so a crash never leaves LATEST pointing at a partial snapshot.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "eaims/error.hpp"

namespace eaims::snapshot {

namespace fs = std::filesystem;

using Files = std::map<std::string, std::string>;  // relative path -> content

inline constexpr const char* kLatestFile = "LATEST";
inline constexpr std::size_t kKeep = 2;

namespace detail {

inline void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
}

inline std::optional<std::size_t> sequence_of(const std::string& name) {
  if (name.rfind("snap-", 0) != 0 || name.size() <= 5) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seq = std::stoull(name.substr(5), &used);
    if (used != name.size() - 5) return std::nullopt;
    return static_cast<std::size_t>(seq);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string name_for(std::size_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap-%06zu", seq);
  return buf;
}

}  // namespace detail

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::corrupt_snapshot, "missing file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Newest published snapshot under `dir`, if any.
inline std::optional<fs::path> latest(const fs::path& dir) {
  const fs::path pointer = dir / kLatestFile;
  if (!fs::exists(pointer)) return std::nullopt;
  std::string name = read_file(pointer);
  while (!name.empty() && (name.back() == '\n' || name.back() == '\r')) name.pop_back();
  if (!detail::sequence_of(name)) {
    throw Error(ErrorCode::corrupt_snapshot, pointer.string() + " holds an invalid name");
  }
  const fs::path snap = dir / name;
  if (!fs::is_directory(snap)) {
    throw Error(ErrorCode::corrupt_snapshot, pointer.string() + " points at missing " +
                                                 snap.string());
  }
  return snap;
}

/// Writes `files` as a new snapshot and publishes it. Returns its directory.
inline fs::path write(const fs::path& dir, const Files& files) {
  try {
    fs::create_directories(dir);
    std::size_t next = 1;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (auto seq = detail::sequence_of(entry.path().filename().string())) {
        next = std::max(next, *seq + 1);
      }
    }
    const std::string name = detail::name_for(next);
    const fs::path staging = dir / (".tmp-" + name);
    fs::remove_all(staging);
    for (const auto& [rel, content] : files) detail::write_file(staging / rel, content);
    fs::rename(staging, dir / name);

    const fs::path pointer_tmp = dir / (std::string(kLatestFile) + ".tmp");
    detail::write_file(pointer_tmp, name + "\n");
    fs::rename(pointer_tmp, dir / kLatestFile);

    // Prune everything but the newest kKeep snapshots.
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (auto seq = detail::sequence_of(entry.path().filename().string())) {
        if (*seq + kKeep <= next) fs::remove_all(entry.path());
      }
    }
    return dir / name;
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::io_failure, e.what());
  }
}

/// Every regular file of a snapshot directory, keyed by relative path.
inline Files read_all(const fs::path& snap) {
  Files files;
  for (const auto& entry : fs::recursive_directory_iterator(snap)) {
    if (!entry.is_regular_file()) continue;
    files[fs::relative(entry.path(), snap).generic_string()] = read_file(entry.path());
  }
  return files;
}

}  // namespace eaims::snapshot
