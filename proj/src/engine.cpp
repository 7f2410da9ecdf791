#include "cranimem/engine.hpp"

#include <chrono>

#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"

namespace cranimem {

namespace {
double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}
}  // namespace

SessionState SessionState::fresh(std::string session_id, std::string goal_text, EngineConfig config) {
  config.validate();
  SessionState s;
  s.session_id = std::move(session_id);
  s.goal.goal_text = std::move(goal_text);
  s.buffer = EpisodicBuffer(config.buffer_capacity);
  s.config = std::move(config);
  return s;
}

Engine::Engine(SessionState state, Backends backends, std::shared_ptr<LinkageEngine> linkage)
    : state_(std::move(state)), calls_(std::make_shared<CallLog>()) {
  if (!backends.chat || !backends.embed) throw ContractError("engine needs chat and embedding backends");
  state_.config.validate();
  backends_ = metered(backends, calls_);
  linkage_ = linkage ? std::move(linkage) : std::make_shared<ExtractionLinkage>(backends_.chat);
}

TurnInput Engine::next_turn(const std::string& text) {
  TurnInput input{state_.session_id, state_.turn + 1, text, now_ms()};
  input.validate();
  state_.turn = input.turn_id;
  return input;
}

TurnResult Engine::ingest(const std::string& text, bool idle) {
  const auto start = std::chrono::steady_clock::now();
  TurnResult result;
  const auto input = next_turn(text);
  result.turn_id = input.turn_id;

  try {
    ensure_goal_embedding(state_.goal, *backends_.embed);
    result.decision = gate(input, state_.goal, state_.config, *backends_.chat, *backends_.embed);
  } catch (const GateError& e) {
    spdlog::warn("turn {} dropped: {}", input.turn_id, e.what());
    result.error = e.what();
    result.backend_failure = e.backend_unavailable();
  } catch (const BackendUnavailable& e) {
    spdlog::warn("turn {} dropped: {}", input.turn_id, e.what());
    result.error = e.what();
    result.backend_failure = true;
  }

  if (result.decision) {
    const auto& d = *result.decision;
    if (d.verdict == Verdict::Accept) {
      MemoryItem item;
      item.item_id = state_.session_id + "#" + std::to_string(input.turn_id);
      item.session_id = state_.session_id;
      item.turn_id = input.turn_id;
      item.snippet = input.text;
      item.created_at = input.received_at;
      item.entities = d.entities;
      item.utility = *d.utility;
      item.gate_route = d.route;
      item.gate_similarity = d.similarity;
      result.stored_item_id = item.item_id;
      auto report = state_.buffer.write(std::move(item));
      if (report.evicted) {
        result.evicted_item_id = report.evicted->item_id;
        state_.trash.append({std::move(*report.evicted), TrashReason::Capacity, input.turn_id, std::nullopt});
      }
    } else if (d.verdict == Verdict::GoalChange) {
      state_.goal = apply_goal_change(state_.goal, d, input);
    }
  }

  result.consolidation = tick(idle);
  result.latency_ms = elapsed_ms(start);
  return result;
}

std::optional<ConsolidationOutcome> Engine::tick(bool idle) {
  if (!should_trigger(state_.turn, state_.last_consolidation_turn, idle, state_.config)) {
    return std::nullopt;
  }
  return run_once(state_.turn);
}

ConsolidationOutcome Engine::consolidate() { return run_once(state_.turn); }

ConsolidationOutcome Engine::run_once(std::int64_t turn) {
  auto outcome = run_consolidation(state_.buffer, state_.graph, state_.trash, state_.config,
                                   *linkage_, turn);
  state_.last_consolidation_turn = turn;
  state_.consolidation_log.push_back(outcome);
  spdlog::debug("consolidation at turn {}: {} promoted, {} pruned, {} retained", turn,
                outcome.promoted.size(), outcome.pruned.size(), outcome.retained.size());
  return outcome;
}

ContextBlock Engine::retrieve(const std::string& query) {
  const auto input = next_turn(query);
  auto block = cranimem::retrieve(input, state_.goal, state_.buffer, state_.graph, state_.config,
                                  *backends_.embed, *backends_.chat);
  std::vector<std::string> touched;
  for (const auto& e : block.episodic_section) touched.push_back(e.item_id);
  state_.buffer.mark_accessed(touched, input.turn_id);
  return block;
}

QueryResult Engine::query(const std::string& query) {
  const auto start = std::chrono::steady_clock::now();
  QueryResult result;
  result.block = retrieve(query);
  result.turn_id = state_.turn;
  const TurnInput input{state_.session_id, state_.turn, query, now_ms()};
  try {
    auto a = answer(input, result.block, state_.goal, *backends_.chat);
    result.answer = std::move(a.answer);
    result.raw_output = std::move(a.raw_output);
  } catch (const AnswerParseError& e) {
    result.parse_error = e.what();
    result.raw_output = e.raw();
  }
  result.latency_ms = elapsed_ms(start);
  return result;
}

}  // namespace cranimem
