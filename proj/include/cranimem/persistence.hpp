#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "cranimem/config.hpp"
#include "cranimem/engine.hpp"

namespace cranimem {

inline constexpr std::int64_t kStateFormatVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

struct FileEntry {
  std::string path;  // relative to the state directory
  std::string sha256;
  std::int64_t records = 0;
};

struct StateManifest {
  std::int64_t format_version = kStateFormatVersion;
  std::string session_id;
  std::int64_t generation = 0;
  std::map<std::string, FileEntry> files;  // role -> file
  EngineConfig config;
};

struct SaveOptions {
  // Called after each step ("buffer", "graph", "trash", "consolidation",
  // "manifest"); throwing from it simulates an interrupted save.
  std::function<void(const std::string& step)> after_step;
};

// Writes every role file under a new generation name via temp-then-rename,
// then swaps the manifest in last. Old generation files are removed only
// once the new manifest is in place.
StateManifest save(const SessionState& state, const std::filesystem::path& dir,
                   const SaveOptions& options = {});

// Refuses unknown versions (VersionError) and checksum mismatches
// (ChecksumError naming the file).
SessionState load(const std::filesystem::path& dir);

StateManifest read_manifest(const std::filesystem::path& dir);

bool has_state(const std::filesystem::path& dir);

}  // namespace cranimem
