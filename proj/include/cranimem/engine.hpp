#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cranimem/backends.hpp"
#include "cranimem/buffer.hpp"
#include "cranimem/config.hpp"
#include "cranimem/consolidation.hpp"
#include "cranimem/gating.hpp"
#include "cranimem/graph.hpp"
#include "cranimem/retrieval.hpp"

namespace cranimem {

// Everything that persists for one session.
struct SessionState {
  std::string session_id;
  EngineConfig config;
  GoalState goal;
  EpisodicBuffer buffer{1};
  KnowledgeGraph graph;
  TrashLog trash;
  std::vector<ConsolidationOutcome> consolidation_log;
  std::int64_t turn = 0;                     // last turn id handed out
  std::int64_t last_consolidation_turn = 0;

  static SessionState fresh(std::string session_id, std::string goal_text, EngineConfig config);

  bool operator==(const SessionState&) const = default;
};

struct TurnResult {
  std::int64_t turn_id = 0;
  std::optional<GateDecision> decision;  // absent when the gate failed
  std::optional<std::string> stored_item_id;
  std::optional<std::string> evicted_item_id;
  std::optional<ConsolidationOutcome> consolidation;
  std::optional<std::string> error;      // gate failure; the turn was dropped
  bool backend_failure = false;
  double latency_ms = 0.0;
};

struct QueryResult {
  std::int64_t turn_id = 0;
  ContextBlock block;
  std::string answer;  // empty when the model output had no response tags
  std::string raw_output;
  std::optional<std::string> parse_error;
  double latency_ms = 0.0;
};

// One session's memory pipeline: gate -> buffer -> scheduled consolidation
// -> graph, plus dual-path retrieval. Not internally synchronized; callers
// keep a single writer per session.
class Engine {
 public:
  Engine(SessionState state, Backends backends, std::shared_ptr<LinkageEngine> linkage = nullptr);

  // Gates one user turn. Gate failures drop the turn and are reported in
  // the result rather than thrown. Throws DomainError on blank text.
  TurnResult ingest(const std::string& text, bool idle = false);

  // Runs consolidation if the schedule or the idle flag says so.
  std::optional<ConsolidationOutcome> tick(bool idle);

  ConsolidationOutcome consolidate();

  // Retrieval as a user turn; records access on the returned snippets.
  ContextBlock retrieve(const std::string& query);

  // Retrieval plus the reasoning prompt. AnswerParseError is folded into
  // the result; BackendUnavailable propagates.
  QueryResult query(const std::string& query);

  const SessionState& state() const noexcept { return state_; }
  const CallLog& calls() const noexcept { return *calls_; }
  std::shared_ptr<CallLog> call_log() const noexcept { return calls_; }

 private:
  TurnInput next_turn(const std::string& text);
  ConsolidationOutcome run_once(std::int64_t turn);

  SessionState state_;
  std::shared_ptr<CallLog> calls_;
  Backends backends_;
  std::shared_ptr<LinkageEngine> linkage_;
};

}  // namespace cranimem
