#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cranimem/backends.hpp"

namespace cranimem {

// Deterministic network-free backend used by `--mock` runs of the CLI and
// service. It answers every prompt kind with simple lexical heuristics so it
// can serve arbitrary datasets: signed feature-hashed bag-of-words
// embeddings, capitalized runs as entities, token overlap for the reader.
class OfflineBackend final : public ChatBackend, public EmbeddingBackend {
 public:
  explicit OfflineBackend(std::size_t dimension = 256) : dimension_(dimension) {}

  std::string chat(const ChatRequest& request) override;
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

  Vector embed_one(const std::string& text) const;

 private:
  std::size_t dimension_;
};

// Maximal runs of capitalized words, numbers kept when inside a run.
std::vector<std::string> capitalized_runs(const std::string& text);

Backends make_offline_backends();

}  // namespace cranimem
