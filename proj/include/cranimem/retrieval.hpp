#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cranimem/backends.hpp"
#include "cranimem/buffer.hpp"
#include "cranimem/config.hpp"
#include "cranimem/graph.hpp"

namespace cranimem {

struct EpisodicEntry {
  std::string item_id;
  std::int64_t turn_id = 0;
  std::string snippet;
  double similarity = 0.0;

  bool operator==(const EpisodicEntry&) const = default;
};

struct ContextBlock {
  std::vector<EpisodicEntry> episodic_section;  // newest first
  std::vector<GraphFact> semantic_section;      // traverse order
  std::int64_t total_chars = 0;                 // bytes of render()
  bool truncated = false;
  bool degraded = false;  // embeddings failed, recency-only ranking
  std::vector<std::string> warnings;

  // Canonical text handed to the reasoning prompt:
  //
  //   ## Episodic memory
  //   [turn 12] <snippet>
  //   ## Semantic memory
  //   <source> —<relation>→ <target> (x<reinforcement>, hop <h>)
  //
  // A section header is present only when the section is non-empty; every
  // line ends with '\n'. An empty block renders as "".
  std::string render() const;

  bool empty() const { return episodic_section.empty() && semantic_section.empty(); }
  bool operator==(const ContextBlock&) const = default;
};

inline constexpr const char* kEpisodicHeader = "## Episodic memory";
inline constexpr const char* kSemanticHeader = "## Semantic memory";

// Fits candidates under the byte budget. When everything does not fit the
// newest snippet is kept first (if it fits alone), then graph facts in
// order, then the remaining snippets newest first.
ContextBlock assemble_block(std::vector<EpisodicEntry> episodic_newest_first,
                            std::vector<GraphFact> facts, std::int64_t budget);

// Seeds for traversal via the comma-list entity prompt; falls back to
// capitalized-run heuristics if the backend is unavailable.
std::vector<std::string> query_entities(const std::string& query, ChatBackend& chat,
                                        bool* used_fallback = nullptr);

std::vector<std::string> parse_entity_list(const std::string& raw);

// Read-only over both stores. The caller records access on the returned
// episodic items.
ContextBlock retrieve(const TurnInput& query, const GoalState& goal, const EpisodicBuffer& buffer,
                      const KnowledgeGraph& graph, const EngineConfig& config,
                      EmbeddingBackend& embed, ChatBackend& chat);

struct AnswerResult {
  std::string answer;
  std::string raw_output;
  double latency_ms = 0.0;
};

// Text between the first <RESPONSE> and the next </RESPONSE>, trimmed.
// Throws AnswerParseError carrying the raw output.
std::string extract_response(const std::string& raw);

AnswerResult answer(const TurnInput& query, const ContextBlock& block, const GoalState& goal,
                    ChatBackend& chat);

}  // namespace cranimem
