#include "cranimem/http_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "cranimem/checksum.hpp"
#include "cranimem/errors.hpp"

namespace cranimem {

using nlohmann::json;

BackendProfile::BackendProfile(Fields fields) : fields_(std::move(fields)) {
  if (fields_.timeout_ms <= 0) throw ConfigError("backend profile: timeout_ms must be > 0");
  if (fields_.max_retries < 0) throw ConfigError("backend profile: max_retries must be >= 0");
  if (fields_.backoff_ms < 0) throw ConfigError("backend profile: backoff_ms must be >= 0");
  if (fields_.base_url.empty()) throw ConfigError("backend profile: base_url is required");
}

BackendProfile BackendProfile::from_json(const json& j) {
  Fields f;
  try {
    f.base_url = j.value("base_url", f.base_url);
    f.model_name = j.value("model_name", f.model_name);
    f.embedding_model_name = j.value("embedding_model_name", f.embedding_model_name);
    f.timeout_ms = j.value("timeout_ms", f.timeout_ms);
    f.max_retries = j.value("max_retries", f.max_retries);
    f.temperature = j.value("temperature", f.temperature);
    f.api_key_env = j.value("api_key_env", f.api_key_env);
    f.backoff_ms = j.value("backoff_ms", f.backoff_ms);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("backend profile: ") + e.what());
  }
  return BackendProfile(std::move(f));
}

BackendProfile BackendProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open backend profile " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("backend profile is not a JSON object");
  return from_json(j);
}

json BackendProfile::to_json() const {
  return {{"base_url", fields_.base_url},
          {"model_name", fields_.model_name},
          {"embedding_model_name", fields_.embedding_model_name},
          {"timeout_ms", fields_.timeout_ms},
          {"max_retries", fields_.max_retries},
          {"temperature", fields_.temperature},
          {"api_key_env", fields_.api_key_env},
          {"backoff_ms", fields_.backoff_ms}};
}

std::string BackendProfile::fingerprint() const { return sha256_hex(to_json().dump()); }

std::optional<std::string> BackendProfile::api_key() const {
  if (fields_.api_key_env.empty()) return std::nullopt;
  if (const char* v = std::getenv(fields_.api_key_env.c_str()); v && *v) return std::string(v);
  return std::nullopt;
}

namespace detail {

UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  UrlParts parts;
  if (path_start == std::string::npos) {
    parts.origin = url;
  } else {
    parts.origin = url.substr(0, path_start);
    parts.prefix = url.substr(path_start);
    while (!parts.prefix.empty() && parts.prefix.back() == '/') parts.prefix.pop_back();
  }
  return parts;
}

std::string post_json(const BackendProfile& profile, const std::string& path,
                      const std::string& body) {
  const auto url = split_url(profile.base_url());
  const auto attempts = profile.max_retries() + 1;
  std::string last_error;
  for (std::int64_t attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      auto delay = profile.fields().backoff_ms << (attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::milliseconds(profile.timeout_ms());
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (auto key = profile.api_key()) headers.emplace("Authorization", "Bearer " + *key);

    count_network_call();
    auto res = client.Post(url.prefix + path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "server returned " + std::to_string(res->status);
    } else if (res->status >= 400) {
      throw BackendUnavailable("request to " + path + " rejected with " +
                               std::to_string(res->status) + ": " + res->body);
    } else {
      return res->body;
    }
    spdlog::warn("backend {} attempt {}/{} failed: {}", path, attempt + 1, attempts, last_error);
  }
  throw BackendUnavailable("backend " + path + " unavailable after " + std::to_string(attempts) +
                           " attempts: " + last_error);
}

}  // namespace detail

HttpChatBackend::HttpChatBackend(BackendProfile profile) : profile_(std::move(profile)) {}

json HttpChatBackend::request_body(const BackendProfile& profile, const ChatRequest& request) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  return {{"model", profile.fields().model_name},
          {"messages", std::move(messages)},
          {"temperature", profile.fields().temperature},
          {"stream", false}};
}

std::string HttpChatBackend::content_from_response(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BackendUnavailable("chat response is not JSON");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendUnavailable("chat response content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendUnavailable(std::string("chat response missing choices[0].message.content: ") +
                             e.what());
  }
}

std::string HttpChatBackend::chat(const ChatRequest& request) {
  auto body = request_body(profile_, request).dump();
  return content_from_response(detail::post_json(profile_, "/chat/completions", body));
}

HttpEmbeddingBackend::HttpEmbeddingBackend(BackendProfile profile) : profile_(std::move(profile)) {}

std::vector<Vector> HttpEmbeddingBackend::vectors_from_response(const std::string& body,
                                                               std::size_t expected) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BackendUnavailable("embedding response is not JSON");
  try {
    const auto& data = j.at("data");
    if (data.size() != expected) {
      throw BackendUnavailable("embedding response has " + std::to_string(data.size()) +
                               " vectors for " + std::to_string(expected) + " inputs");
    }
    std::vector<std::pair<std::size_t, Vector>> indexed;
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto idx = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
      indexed.emplace_back(idx, data[i].at("embedding").get<Vector>());
    }
    std::sort(indexed.begin(), indexed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Vector> out;
    for (std::size_t i = 0; i < indexed.size(); ++i) {
      if (indexed[i].first != i) throw BackendUnavailable("embedding response indices are not 0..n-1");
      out.push_back(normalized(indexed[i].second));
    }
    return out;
  } catch (const json::exception& e) {
    throw BackendUnavailable(std::string("malformed embedding response: ") + e.what());
  } catch (const DomainError& e) {
    throw BackendUnavailable(std::string("embedding server returned a zero vector: ") + e.what());
  }
}

std::vector<Vector> HttpEmbeddingBackend::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ContractError("embed needs at least one text");
  json body = {{"model", profile_.fields().embedding_model_name}, {"input", texts}};
  auto vectors = vectors_from_response(detail::post_json(profile_, "/embeddings", body.dump()),
                                       texts.size());
  std::lock_guard lock(mu_);
  for (const auto& v : vectors) {
    if (!dimension_) dimension_ = v.size();
    if (v.size() != *dimension_) {
      throw BackendUnavailable("embedding dimension drifted from " + std::to_string(*dimension_) +
                               " to " + std::to_string(v.size()));
    }
  }
  return vectors;
}

Backends make_http_backends(const BackendProfile& profile) {
  return Backends{std::make_shared<HttpChatBackend>(profile),
                  std::make_shared<HttpEmbeddingBackend>(profile)};
}

}  // namespace cranimem
