#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cranimem/errors.hpp"
#include "cranimem/http_backend.hpp"

using namespace cranimem;
using nlohmann::json;

namespace {

// A loopback model server whose handlers the test controls.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

BackendProfile profile(const std::string& base, std::int64_t retries = 2) {
  BackendProfile::Fields f;
  f.base_url = base;
  f.model_name = "test-chat";
  f.embedding_model_name = "test-embed";
  f.timeout_ms = 2000;
  f.max_retries = retries;
  f.backoff_ms = 1;
  f.api_key_env = "CRANIMEM_TEST_KEY";
  return BackendProfile(f);
}

}  // namespace

TEST(HttpChat, WireShapeAndBearerKey) {
  FakeServer fake;
  json seen;
  std::string auth;
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hi there"}}]})", "application/json");
  });
  ::setenv("CRANIMEM_TEST_KEY", "sekrit", 1);
  HttpChatBackend chat(profile(fake.base()));
  EXPECT_EQ(chat.chat({PromptKind::ReflexUtility, "system text", "user text", "user text"}), "hi there");
  ::unsetenv("CRANIMEM_TEST_KEY");

  EXPECT_EQ(seen.at("model"), "test-chat");
  ASSERT_EQ(seen.at("messages").size(), 2u);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][0]["content"], "system text");
  EXPECT_EQ(seen["messages"][1]["role"], "user");
  EXPECT_EQ(seen["messages"][1]["content"], "user text");
  EXPECT_EQ(auth, "Bearer sekrit");
}

TEST(HttpChat, EmptySystemMessageIsOmitted) {
  auto body = HttpChatBackend::request_body(profile("http://x/v1"), {PromptKind::Reasoning, "", "prompt", "q"});
  ASSERT_EQ(body.at("messages").size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
}

TEST(HttpChat, RetriesTransientFailuresThenSucceeds) {
  FakeServer fake;
  std::atomic<int> hits{0};
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
  });
  HttpChatBackend chat(profile(fake.base(), 2));
  const auto before = network_call_count();
  EXPECT_EQ(chat.chat({PromptKind::Reasoning, "", "p", "q"}), "ok");
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(network_call_count() - before, 3u);
}

TEST(HttpChat, ExhaustedRetriesRaiseBackendUnavailable) {
  FakeServer fake;
  std::atomic<int> hits{0};
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  HttpChatBackend chat(profile(fake.base(), 2));
  EXPECT_THROW(chat.chat({PromptKind::Reasoning, "", "p", "q"}), BackendUnavailable);
  EXPECT_EQ(hits.load(), 3);
}

TEST(HttpChat, ClientErrorsAreNotRetried) {
  FakeServer fake;
  std::atomic<int> hits{0};
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
    res.set_content(R"({"error":"bad model"})", "application/json");
  });
  HttpChatBackend chat(profile(fake.base(), 3));
  EXPECT_THROW(chat.chat({PromptKind::Reasoning, "", "p", "q"}), BackendUnavailable);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpChat, UnreachableServerRaisesAfterRetries) {
  // Port 1 on loopback is essentially never listening.
  HttpChatBackend chat(profile("http://127.0.0.1:1/v1", 1));
  EXPECT_THROW(chat.chat({PromptKind::Reasoning, "", "p", "q"}), BackendUnavailable);
}

TEST(HttpChat, MalformedResponses) {
  EXPECT_THROW(HttpChatBackend::content_from_response("not json"), BackendUnavailable);
  EXPECT_THROW(HttpChatBackend::content_from_response(R"({"choices":[]})"), BackendUnavailable);
  EXPECT_EQ(HttpChatBackend::content_from_response(R"({"choices":[{"message":{"content":"x"}}]})"), "x");
}

TEST(HttpEmbedding, SortsByIndexNormalizesAndPinsDimension) {
  FakeServer fake;
  std::atomic<int> dim{2};
  fake.server().Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    auto in = json::parse(req.body);
    json data = json::array();
    const auto n = in.at("input").size();
    for (std::size_t k = n; k-- > 0;) {  // deliberately reversed
      json v = json::array();
      for (int d = 0; d < dim; ++d) v.push_back(d == 0 ? 3.0 * static_cast<double>(k + 1) : 4.0 * static_cast<double>(k + 1));
      data.push_back({{"index", k}, {"embedding", v}});
    }
    res.set_content(json{{"data", data}}.dump(), "application/json");
  });
  HttpEmbeddingBackend embed(profile(fake.base()));
  auto v = embed.embed({"a", "b"});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v[0][0], 0.6, 1e-12);
  EXPECT_NEAR(v[1][1], 0.8, 1e-12);
  dim = 3;
  EXPECT_THROW(embed.embed({"c"}), BackendUnavailable);
}

TEST(HttpEmbedding, CountMismatchIsAnError) {
  EXPECT_THROW(HttpEmbeddingBackend::vectors_from_response(R"({"data":[{"index":0,"embedding":[1,0]}]})", 2),
               BackendUnavailable);
}

TEST(Profile, ValidationAndJson) {
  auto p = BackendProfile::from_json(
      json{{"base_url", "http://localhost:9999/v1"}, {"model_name", "m"}, {"embedding_model_name", "e"}});
  EXPECT_EQ(p.base_url(), "http://localhost:9999/v1");
  EXPECT_EQ(p.fingerprint(), BackendProfile::from_json(p.to_json()).fingerprint());
  EXPECT_FALSE(p.to_json().dump().empty());
  EXPECT_THROW(BackendProfile::from_json(json{{"base_url", "x"}, {"timeout_ms", 0}}), ConfigError);
  EXPECT_THROW(detail::split_url("localhost:80"), ConfigError);
  auto parts = detail::split_url("https://api.example.com:8443/v1/");
  EXPECT_EQ(parts.origin, "https://api.example.com:8443");
  EXPECT_EQ(parts.prefix, "/v1");
}
