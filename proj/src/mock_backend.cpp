#include "cranimem/mock_backend.hpp"

#include "cranimem/errors.hpp"

namespace cranimem {

MockBackend& MockBackend::script(PromptKind kind, const std::string& subject, std::string response) {
  scripted_[{kind, subject}] = std::move(response);
  return *this;
}

MockBackend& MockBackend::responder(PromptKind kind, Responder fn) {
  responders_[kind] = std::move(fn);
  return *this;
}

MockBackend& MockBackend::embedding(const std::string& text, Vector v) {
  table_[text] = std::move(v);
  return *this;
}

MockBackend& MockBackend::embedder(Embedder fn) {
  embedder_ = std::move(fn);
  return *this;
}

MockBackend& MockBackend::fail(PromptKind kind) {
  failing_[index(kind)] = true;
  return *this;
}

MockBackend& MockBackend::fail_embeddings() {
  embeddings_failing_ = true;
  return *this;
}

std::string MockBackend::chat(const ChatRequest& request) {
  counters_[index(request.kind)].fetch_add(1);
  if (failing_[index(request.kind)]) {
    throw BackendUnavailable(std::string("mock: ") + to_string(request.kind) + " marked as failing");
  }
  if (auto it = scripted_.find({request.kind, request.subject}); it != scripted_.end()) {
    return it->second;
  }
  if (auto it = responders_.find(request.kind); it != responders_.end()) {
    return it->second(request);
  }
  throw MockMiss(std::string("mock has no ") + to_string(request.kind) + " response for '" +
                 request.subject + "'");
}

std::vector<Vector> MockBackend::embed(const std::vector<std::string>& texts) {
  embed_calls_.fetch_add(1);
  embedded_texts_.fetch_add(texts.size());
  if (embeddings_failing_) throw BackendUnavailable("mock: embeddings marked as failing");
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (auto it = table_.find(t); it != table_.end()) {
      out.push_back(normalized(it->second));
    } else if (embedder_) {
      out.push_back(normalized(embedder_(t)));
    } else {
      throw MockMiss("mock has no embedding for '" + t + "'");
    }
  }
  return out;
}

std::uint64_t MockBackend::calls(PromptKind kind) const { return counters_[index(kind)].load(); }

std::uint64_t MockBackend::total_chat_calls() const {
  std::uint64_t total = 0;
  for (const auto& c : counters_) total += c.load();
  return total;
}

void MockBackend::reset_counters() {
  for (auto& c : counters_) c.store(0);
  embed_calls_.store(0);
  embedded_texts_.store(0);
}

}  // namespace cranimem
