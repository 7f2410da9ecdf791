#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cranimem/backends.hpp"
#include "cranimem/config.hpp"
#include "cranimem/core.hpp"

namespace cranimem {

enum class Verdict { Accept, Reject, GoalChange, Command };

const char* to_string(Verdict verdict);

struct GateDecision {
  Verdict verdict = Verdict::Reject;
  GateRoute route = GateRoute::Cortex;
  double similarity = 0.0;
  std::optional<UtilityScores> utility;  // present iff Accept
  std::vector<std::string> entities;
  std::string reason;
  std::vector<std::string> warnings;
};

// Similarity-routed ingestion gate.
//
//   sim >= tau_reflex            reflex route, utility-only tagging, Accept
//   tau_noise <= sim < tau_reflex cortex route, full gate judgment
//   sim < tau_noise              Reject, no tagger call
//
// With gate_profile=priority the middle and upper bands instead use the
// 1-10 gating prompt followed by utility tagging. With gate_enabled=false
// every input takes the reflex route (used for ungated contrast runs).
//
// base_utility is always recomputed from the three returned scores.
// Backend or parse failures surface as GateError.
GateDecision gate(const TurnInput& input, const GoalState& goal, const EngineConfig& config,
                  ChatBackend& chat, EmbeddingBackend& embed);

// Embeds the goal once and caches the unit vector on the state.
const Vector& ensure_goal_embedding(GoalState& goal, EmbeddingBackend& embed);

GoalState apply_goal_change(const GoalState& goal, const GateDecision& decision,
                            const TurnInput& input);

// User message for the cortex gate; that prompt carries no slots of its own.
std::string cortex_user_message(const std::string& goal, const std::string& input);

}  // namespace cranimem
