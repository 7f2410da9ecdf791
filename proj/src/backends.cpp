#include "cranimem/backends.hpp"

#include <chrono>

namespace cranimem {

namespace {
std::atomic<std::uint64_t> g_network_calls{0};

template <typename F>
auto timed(F&& f, double& elapsed_ms) {
  const auto start = std::chrono::steady_clock::now();
  struct Stop {
    std::chrono::steady_clock::time_point start;
    double& out;
    ~Stop() {
      out = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
    }
  } stop{start, elapsed_ms};
  return f();
}
}  // namespace

void CallLog::record(std::string operation, double latency_ms) {
  std::lock_guard lock(mu_);
  calls_.push_back({std::move(operation), latency_ms < 0.0 ? 0.0 : latency_ms});
}

std::vector<CallRecord> CallLog::snapshot() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

void CallLog::clear() {
  std::lock_guard lock(mu_);
  calls_.clear();
}

std::string MeteredChat::chat(const ChatRequest& request) {
  double ms = 0.0;
  try {
    auto out = timed([&] { return inner_->chat(request); }, ms);
    log_->record(to_string(request.kind), ms);
    return out;
  } catch (...) {
    log_->record(to_string(request.kind), ms);
    throw;
  }
}

std::vector<Vector> MeteredEmbedding::embed(const std::vector<std::string>& texts) {
  double ms = 0.0;
  try {
    auto out = timed([&] { return inner_->embed(texts); }, ms);
    log_->record("embed", ms);
    return out;
  } catch (...) {
    log_->record("embed", ms);
    throw;
  }
}

Backends metered(const Backends& inner, std::shared_ptr<CallLog> log) {
  return Backends{std::make_shared<MeteredChat>(inner.chat, log),
                  std::make_shared<MeteredEmbedding>(inner.embed, log)};
}

std::uint64_t network_call_count() { return g_network_calls.load(); }
void count_network_call() { g_network_calls.fetch_add(1); }

}  // namespace cranimem
