#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cranimem/backends.hpp"

namespace cranimem {

// Deterministic scripted backend for tests. Keyed responses win over
// responders; a lookup that matches neither throws MockMiss. Counters are
// atomic so one mock can serve parallel engines.
class MockBackend final : public ChatBackend, public EmbeddingBackend {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;
  using Embedder = std::function<Vector(const std::string&)>;

  MockBackend() = default;
  MockBackend(const MockBackend&) = delete;
  MockBackend& operator=(const MockBackend&) = delete;

  // Script setup. Not thread-safe; finish scripting before serving calls.
  MockBackend& script(PromptKind kind, const std::string& subject, std::string response);
  MockBackend& responder(PromptKind kind, Responder fn);
  MockBackend& embedding(const std::string& text, Vector v);
  MockBackend& embedder(Embedder fn);
  // Makes every chat call of `kind` throw BackendUnavailable.
  MockBackend& fail(PromptKind kind);
  MockBackend& fail_embeddings();

  std::string chat(const ChatRequest& request) override;
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

  std::uint64_t calls(PromptKind kind) const;
  std::uint64_t total_chat_calls() const;
  std::uint64_t embed_calls() const { return embed_calls_.load(); }
  std::uint64_t embedded_texts() const { return embedded_texts_.load(); }
  void reset_counters();

 private:
  static std::size_t index(PromptKind kind) { return static_cast<std::size_t>(kind); }

  std::map<std::pair<PromptKind, std::string>, std::string> scripted_;
  std::map<PromptKind, Responder> responders_;
  std::map<std::string, Vector> table_;
  Embedder embedder_;
  std::array<bool, kAllPromptKinds.size()> failing_{};
  bool embeddings_failing_ = false;
  std::array<std::atomic<std::uint64_t>, kAllPromptKinds.size()> counters_{};
  std::atomic<std::uint64_t> embed_calls_{0};
  std::atomic<std::uint64_t> embedded_texts_{0};
};

}  // namespace cranimem
