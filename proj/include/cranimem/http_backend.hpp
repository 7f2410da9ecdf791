#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "cranimem/backends.hpp"

namespace cranimem {

// Connection and decoding settings, fixed for the lifetime of a run.
class BackendProfile {
 public:
  struct Fields {
    std::string base_url = "http://127.0.0.1:8000/v1";
    std::string model_name;
    std::string embedding_model_name;
    std::int64_t timeout_ms = 60000;
    std::int64_t max_retries = 2;
    double temperature = 0.0;
    std::string api_key_env = "CRANIMEM_API_KEY";
    std::int64_t backoff_ms = 250;  // first retry delay, doubled each attempt
  };

  explicit BackendProfile(Fields fields);

  static BackendProfile from_json(const nlohmann::json& j);
  static BackendProfile load(const std::filesystem::path& path);

  const Fields& fields() const noexcept { return fields_; }
  const std::string& base_url() const noexcept { return fields_.base_url; }
  std::int64_t timeout_ms() const noexcept { return fields_.timeout_ms; }
  std::int64_t max_retries() const noexcept { return fields_.max_retries; }

  nlohmann::json to_json() const;  // never includes the key itself
  std::string fingerprint() const;
  std::optional<std::string> api_key() const;

 private:
  Fields fields_;
};

// Chat-completion JSON over HTTP: POST {base}/chat/completions.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendProfile profile);
  std::string chat(const ChatRequest& request) override;

  static nlohmann::json request_body(const BackendProfile& profile, const ChatRequest& request);
  static std::string content_from_response(const std::string& body);

 private:
  BackendProfile profile_;
};

// Embeddings JSON over HTTP: POST {base}/embeddings. Vectors are normalized
// client side; the first response fixes the dimension for the run.
class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(BackendProfile profile);
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

  static std::vector<Vector> vectors_from_response(const std::string& body, std::size_t expected);

 private:
  BackendProfile profile_;
  std::mutex mu_;
  std::optional<std::size_t> dimension_;
};

Backends make_http_backends(const BackendProfile& profile);

namespace detail {
struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};
UrlParts split_url(const std::string& url);

// POST with retry/backoff on transport errors and 5xx/429 responses.
std::string post_json(const BackendProfile& profile, const std::string& path,
                      const std::string& body);
}  // namespace detail

}  // namespace cranimem
