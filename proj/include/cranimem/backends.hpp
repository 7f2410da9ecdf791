#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cranimem/core.hpp"
#include "cranimem/prompts.hpp"

namespace cranimem {

struct ChatRequest {
  PromptKind kind = PromptKind::Reasoning;
  std::string system;   // system message, may be empty
  std::string user;     // user message
  std::string subject;  // the raw input this call is about; mock lookup key
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Raw model text. Throws BackendUnavailable once retries are exhausted.
  virtual std::string chat(const ChatRequest& request) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  // One unit vector per input, order preserved.
  virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
};

struct Backends {
  std::shared_ptr<ChatBackend> chat;
  std::shared_ptr<EmbeddingBackend> embed;
};

struct CallRecord {
  std::string operation;  // prompt kind name or "embed"
  double latency_ms = 0.0;
};

// Append-only per-call latency log, shared by the metered wrappers.
class CallLog {
 public:
  void record(std::string operation, double latency_ms);
  std::vector<CallRecord> snapshot() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> calls_;
};

// Decorators that time each call into a CallLog.
class MeteredChat final : public ChatBackend {
 public:
  MeteredChat(std::shared_ptr<ChatBackend> inner, std::shared_ptr<CallLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::string chat(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<CallLog> log_;
};

class MeteredEmbedding final : public EmbeddingBackend {
 public:
  MeteredEmbedding(std::shared_ptr<EmbeddingBackend> inner, std::shared_ptr<CallLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

 private:
  std::shared_ptr<EmbeddingBackend> inner_;
  std::shared_ptr<CallLog> log_;
};

Backends metered(const Backends& inner, std::shared_ptr<CallLog> log);

// Process-wide count of real network requests issued by the HTTP clients.
std::uint64_t network_call_count();
void count_network_call();

}  // namespace cranimem
