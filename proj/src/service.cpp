#include "cranimem/service.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "cranimem/engine.hpp"
#include "cranimem/errors.hpp"
#include "cranimem/persistence.hpp"
#include "cranimem/serialization.hpp"

namespace cranimem {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ApiFailure {
  int status;
  std::string code;
  std::string message;
};

ApiResponse error_response(const ApiFailure& f, int retry_after) {
  ApiResponse r;
  r.status = f.status;
  r.body = {{"error", {{"code", f.code}, {"message", f.message}}}};
  if (f.status == 503) r.headers["Retry-After"] = std::to_string(retry_after);
  return r;
}

[[noreturn]] void bad_request(const std::string& message) { throw ApiFailure{400, "bad_request", message}; }

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) bad_request("request body is not valid JSON");
  if (!j.is_object()) bad_request("request body must be a JSON object");
  return j;
}

std::string required_text(const json& body, const char* field) {
  if (!body.contains(field)) bad_request(std::string("missing field '") + field + "'");
  if (!body.at(field).is_string()) bad_request(std::string("field '") + field + "' must be a string");
  auto v = body.at(field).get<std::string>();
  if (v.find_first_not_of(" \t\r\n") == std::string::npos) {
    bad_request(std::string("field '") + field + "' must be non-empty");
  }
  return v;
}

bool valid_session_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, pattern);
}

json turn_json(const TurnResult& t) {
  json j = {{"turn_id", t.turn_id}, {"latency_ms", t.latency_ms}};
  if (t.decision) {
    j["decision"] = *t.decision;
    j["verdict"] = to_string(t.decision->verdict);
  } else {
    j["decision"] = nullptr;
    j["verdict"] = "dropped";
  }
  j["stored_item_id"] = t.stored_item_id ? json(*t.stored_item_id) : json(nullptr);
  j["evicted_item_id"] = t.evicted_item_id ? json(*t.evicted_item_id) : json(nullptr);
  j["consolidation"] = t.consolidation ? json(*t.consolidation) : json(nullptr);
  j["error"] = t.error ? json(*t.error) : json(nullptr);
  return j;
}

}  // namespace

struct MemoryService::Impl {
  struct Session {
    std::string session_id;
    std::int64_t created_at = 0;
    std::unique_ptr<Engine> engine;
    std::mutex mu;
  };

  ServiceOptions options;
  mutable std::shared_mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::atomic<std::uint64_t> next_id{1};
  httplib::Server server;
  std::thread background;

  explicit Impl(ServiceOptions o) : options(std::move(o)) {
    if (!options.backends.chat || !options.backends.embed) throw ContractError("service needs backends");
    options.config.validate();
    if (options.state_dir) restore_sessions();
    install_routes();
  }

  void restore_sessions() {
    std::error_code ec;
    fs::create_directories(*options.state_dir, ec);
    for (const auto& entry : fs::directory_iterator(*options.state_dir, ec)) {
      if (!entry.is_directory() || !has_state(entry.path())) continue;
      try {
        auto state = load(entry.path());
        auto s = std::make_shared<Session>();
        s->session_id = state.session_id;
        s->created_at = now_ms();
        s->engine = std::make_unique<Engine>(std::move(state), options.backends);
        sessions[s->session_id] = std::move(s);
      } catch (const Error& e) {
        spdlog::error("skipping session in {}: {}", entry.path().string(), e.what());
      }
    }
    if (!sessions.empty()) spdlog::info("restored {} session(s)", sessions.size());
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(sessions_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw ApiFailure{404, "session_not_found", "no session '" + id + "'"};
    return it->second;
  }

  json summary(const Session& s) const {
    const auto& st = s.engine->state();
    return {{"session_id", s.session_id},
            {"goal", st.goal.goal_text},
            {"created_at", s.created_at},
            {"turn", st.turn},
            {"buffer_size", st.buffer.size()},
            {"node_count", st.graph.node_count()},
            {"edge_count", st.graph.edge_count()}};
  }

  ApiResponse create_session(const json& body) {
    const auto goal = required_text(body, "goal");
    EngineConfig config = options.config;
    if (body.contains("config")) {
      if (!body.at("config").is_object()) bad_request("'config' must be an object");
      try {
        for (const auto& [key, value] : body.at("config").items()) {
          if (value.is_string()) config.set(key, value.get<std::string>());
          else if (value.is_boolean()) config.set(key, value.get<bool>() ? "true" : "false");
          else if (value.is_number()) config.set(key, value.dump());
          else bad_request("config value for '" + key + "' must be a scalar");
        }
        config.validate();
      } catch (const ConfigError& e) {
        bad_request(e.what());
      } catch (const DomainError& e) {
        bad_request(e.what());
      }
    }
    std::string id;
    if (body.contains("session_id")) {
      if (!body.at("session_id").is_string()) bad_request("'session_id' must be a string");
      id = body.at("session_id").get<std::string>();
      if (!valid_session_id(id)) bad_request("session_id must match [A-Za-z0-9_-]{1,64}");
    }

    std::unique_lock lock(sessions_mu);
    if (id.empty()) {
      do {
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id++));
        id = buf;
      } while (sessions.count(id));
    } else if (sessions.count(id)) {
      throw ApiFailure{409, "session_exists", "session '" + id + "' already exists"};
    }
    auto s = std::make_shared<Session>();
    s->session_id = id;
    s->created_at = now_ms();
    s->engine = std::make_unique<Engine>(SessionState::fresh(id, goal, config), options.backends);
    auto out = summary(*s);
    sessions[id] = std::move(s);
    ApiResponse r;
    r.status = 201;
    r.body = std::move(out);
    return r;
  }

  ApiResponse session_call(const std::string& id, const std::string& action, const std::string& method,
                           const json& body) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    auto& engine = *s->engine;
    ApiResponse r;

    if (method == "GET") {
      const auto& st = engine.state();
      if (action.empty()) {
        r.body = summary(*s);
      } else if (action == "buffer") {
        r.body = {{"capacity", st.buffer.capacity()},
                  {"size", st.buffer.size()},
                  {"evicted_count", st.buffer.evicted_count()},
                  {"items", st.buffer.items()}};
      } else if (action == "graph") {
        json nodes = json::array(), edges = json::array();
        for (const auto& [nid, n] : st.graph.nodes()) nodes.push_back(n);
        for (const auto& [eid, e] : st.graph.edges()) edges.push_back(e);
        r.body = {{"node_count", st.graph.node_count()},
                  {"edge_count", st.graph.edge_count()},
                  {"nodes", nodes},
                  {"edges", edges}};
      } else if (action == "trash") {
        r.body = {{"size", st.trash.size()}, {"entries", st.trash.entries()}};
      } else {
        throw ApiFailure{404, "not_found", "no such resource"};
      }
      return r;
    }

    if (action == "turns") {
      const auto text = required_text(body, "text");
      bool idle = false;
      if (body.contains("idle")) {
        if (!body.at("idle").is_boolean()) bad_request("'idle' must be a boolean");
        idle = body.at("idle").get<bool>();
      }
      auto t = engine.ingest(text, idle);
      if (t.backend_failure) {
        throw ApiFailure{503, "backend_unavailable", t.error.value_or("backend unavailable")};
      }
      r.body = turn_json(t);
    } else if (action == "retrieve") {
      auto block = engine.retrieve(required_text(body, "query"));
      r.body = {{"turn_id", engine.state().turn}, {"context", block}, {"rendered", block.render()}};
    } else if (action == "answer") {
      auto q = engine.query(required_text(body, "query"));
      r.body = {{"turn_id", q.turn_id},
                {"answer", q.answer},
                {"raw_output", q.raw_output},
                {"parse_error", q.parse_error ? json(*q.parse_error) : json(nullptr)},
                {"latency_ms", q.latency_ms},
                {"context", q.block}};
    } else if (action == "consolidate") {
      r.body = engine.consolidate();
    } else if (action == "save") {
      if (!options.state_dir) {
        throw ApiFailure{409, "persistence_disabled", "the service was started without a state directory"};
      }
      auto m = save(engine.state(), *options.state_dir / id);
      json files = json::object();
      for (const auto& [role, f] : m.files) files[role] = {{"path", f.path}, {"sha256", f.sha256}, {"records", f.records}};
      r.body = {{"format_version", m.format_version},
                {"session_id", m.session_id},
                {"generation", m.generation},
                {"files", files}};
    } else {
      throw ApiFailure{404, "not_found", "no such endpoint"};
    }
    return r;
  }

  ApiResponse route(const ApiRequest& req) {
    static const std::regex session_path("^/v1/sessions/([^/]+)(?:/([a-z]+))?/?$");
    const auto& path = req.path;
    if (path == "/v1/health") {
      if (req.method != "GET") throw ApiFailure{405, "method_not_allowed", "use GET"};
      std::shared_lock lock(sessions_mu);
      ApiResponse r;
      r.body = {{"status", "ok"}, {"sessions", sessions.size()}, {"format_version", kStateFormatVersion}};
      return r;
    }
    if (path == "/v1/sessions" || path == "/v1/sessions/") {
      if (req.method != "POST") throw ApiFailure{405, "method_not_allowed", "use POST"};
      return create_session(parse_body(req.body));
    }
    std::smatch m;
    if (std::regex_match(path, m, session_path)) {
      const std::string id = m[1];
      const std::string action = m[2];
      const bool is_get = action.empty() || action == "buffer" || action == "graph" || action == "trash";
      if (is_get && req.method != "GET") throw ApiFailure{405, "method_not_allowed", "use GET"};
      if (!is_get && req.method != "POST") throw ApiFailure{405, "method_not_allowed", "use POST"};
      return session_call(id, action, req.method, is_get ? json::object() : parse_body(req.body));
    }
    throw ApiFailure{404, "not_found", "no such endpoint"};
  }

  ApiResponse handle(const ApiRequest& req) {
    try {
      return route(req);
    } catch (const ApiFailure& f) {
      return error_response(f, options.retry_after_seconds);
    } catch (const BackendUnavailable& e) {
      return error_response({503, "backend_unavailable", e.what()}, options.retry_after_seconds);
    } catch (const DomainError& e) {
      return error_response({400, "bad_request", e.what()}, options.retry_after_seconds);
    } catch (const PersistenceError& e) {
      return error_response({500, "persistence_error", e.what()}, options.retry_after_seconds);
    } catch (const std::exception& e) {
      spdlog::error("{} {} failed: {}", req.method, req.path, e.what());
      return error_response({500, "internal", e.what()}, options.retry_after_seconds);
    }
  }

  void install_routes() {
    auto bridge = [this](const httplib::Request& in, httplib::Response& out) {
      auto r = handle({in.method, in.path, in.body});
      out.status = r.status;
      for (const auto& [k, v] : r.headers) out.set_header(k, v);
      out.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", bridge);
    server.Post(".*", bridge);
    server.Put(".*", bridge);
    server.Delete(".*", bridge);
    server.Patch(".*", bridge);
  }

  void flush() {
    if (!options.state_dir) return;
    std::vector<std::shared_ptr<Session>> all;
    {
      std::shared_lock lock(sessions_mu);
      for (const auto& [id, s] : sessions) all.push_back(s);
    }
    for (const auto& s : all) {
      std::lock_guard lock(s->mu);
      try {
        save(s->engine->state(), *options.state_dir / s->session_id);
      } catch (const Error& e) {
        spdlog::error("could not save session {}: {}", s->session_id, e.what());
      }
    }
  }
};

MemoryService::MemoryService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

MemoryService::~MemoryService() {
  stop();
  impl_->flush();
}

ApiResponse MemoryService::handle(const ApiRequest& request) { return impl_->handle(request); }

bool MemoryService::listen(const std::string& host, int port) {
  spdlog::info("listening on {}:{}", host, port);
  return impl_->server.listen(host, port);
}

int MemoryService::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) throw Error("could not bind " + host);
  impl_->background = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void MemoryService::stop() {
  impl_->server.stop();
  if (impl_->background.joinable()) impl_->background.join();
}

void MemoryService::flush() { impl_->flush(); }

std::size_t MemoryService::session_count() const {
  std::shared_lock lock(impl_->sessions_mu);
  return impl_->sessions.size();
}

}  // namespace cranimem
