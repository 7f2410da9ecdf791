#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "cranimem/backends.hpp"
#include "cranimem/config.hpp"

namespace cranimem {

struct ApiRequest {
  std::string method;  // "GET", "POST", ...
  std::string path;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  std::map<std::string, std::string> headers;
};

struct ServiceOptions {
  Backends backends;
  EngineConfig config;  // defaults for new sessions
  // When set, each session persists to state_dir/<session_id>; sessions
  // found there are restored on construction and flushed on shutdown.
  std::optional<std::filesystem::path> state_dir;
  int retry_after_seconds = 5;
};

// Per-session engines behind the /v1 endpoints. Different sessions run
// concurrently; calls on one session are serialized.
class MemoryService {
 public:
  explicit MemoryService(ServiceOptions options);
  ~MemoryService();
  MemoryService(const MemoryService&) = delete;
  MemoryService& operator=(const MemoryService&) = delete;

  // Routes one request without any socket; the HTTP server calls this too.
  ApiResponse handle(const ApiRequest& request);

  // Binds and serves until stop(). Returns false if the bind failed.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  // Saves every session when a state directory is configured.
  void flush();

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cranimem
