#include "cranimem/gating.hpp"

#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"
#include "cranimem/structured.hpp"
#include "cranimem/text.hpp"

namespace cranimem {

namespace {

template <typename F>
std::string call_tagger(ChatBackend& chat, const ChatRequest& request, F&& parse_into) {
  std::string raw;
  try {
    raw = chat.chat(request);
  } catch (const BackendUnavailable& e) {
    throw GateError(std::string("gate backend unavailable: ") + e.what(), "", true);
  }
  try {
    parse_into(raw);
  } catch (const ParseError& e) {
    throw GateError(std::string("unusable ") + to_string(request.kind) + " output: " + e.what(),
                    raw);
  }
  return raw;
}

GateDecision accept(GateRoute route, double sim, double importance, double surprise, double emotion,
                    std::vector<std::string> entities, std::string reason,
                    std::vector<std::string> warnings) {
  GateDecision d;
  d.verdict = Verdict::Accept;
  d.route = route;
  d.similarity = sim;
  d.utility = UtilityScores::from(importance, surprise, emotion);
  d.entities = dedupe_entities(entities);
  d.reason = std::move(reason);
  d.warnings = std::move(warnings);
  return d;
}

GateDecision reflex(const TurnInput& input, double sim, ChatBackend& chat, PromptKind kind) {
  ChatRequest req{kind, std::string(prompt_template(kind)), input.text, input.text};
  req.system = fill_template(req.system, {});
  UtilityOutput out;
  call_tagger(chat, req, [&](const std::string& raw) { out = parse_utility(raw); });
  return accept(GateRoute::Reflex, sim, out.importance, out.surprise, out.emotion, out.entities,
                "", out.warnings);
}

GateDecision cortex(const TurnInput& input, const GoalState& goal, double sim, ChatBackend& chat) {
  ChatRequest req{PromptKind::CortexGating,
                  fill_template(prompt_template(PromptKind::CortexGating), {}),
                  cortex_user_message(goal.goal_text, input.text), input.text};
  CortexOutput out;
  std::string raw = call_tagger(chat, req, [&](const std::string& r) { out = parse_cortex(r); });

  const std::string category = normalize_name(out.category);
  GateDecision d;
  d.route = GateRoute::Cortex;
  d.similarity = sim;
  d.entities = dedupe_entities(out.entities);
  d.reason = out.reason;
  d.warnings = out.warnings;
  if (category == "relevant_context") {
    auto a = accept(GateRoute::Cortex, sim, out.importance, out.surprise, out.emotion,
                    out.entities, out.reason, out.warnings);
    if (out.is_noise) a.warnings.push_back("is_noise=true contradicts category relevant_context");
    return a;
  }
  if (category == "noise") d.verdict = Verdict::Reject;
  else if (category == "goal_change") d.verdict = Verdict::GoalChange;
  else if (category == "command") d.verdict = Verdict::Command;
  else throw GateError("cortex gate returned unknown category '" + out.category + "'", raw);
  return d;
}

GateDecision priority(const TurnInput& input, const GoalState& goal, double sim,
                      ChatBackend& chat) {
  ChatRequest req{PromptKind::Gating,
                  fill_template(prompt_template(PromptKind::Gating), {{"goal", goal.goal_text}}),
                  input.text, input.text};
  GatingOutput g;
  call_tagger(chat, req, [&](const std::string& raw) { g = parse_gating(raw); });
  if (g.is_noise) {
    GateDecision d;
    d.verdict = Verdict::Reject;
    d.similarity = sim;
    d.entities = dedupe_entities(g.entities);
    d.reason = "priority " + std::to_string(g.priority_score) + ": " + g.reasoning;
    return d;
  }
  auto d = reflex(input, sim, chat, PromptKind::UtilityTagging);
  d.entities = dedupe_entities([&] {
    auto all = g.entities;
    all.insert(all.end(), d.entities.begin(), d.entities.end());
    return all;
  }());
  d.reason = "priority " + std::to_string(g.priority_score) + ": " + g.reasoning;
  return d;
}

}  // namespace

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Accept: return "accept";
    case Verdict::Reject: return "reject";
    case Verdict::GoalChange: return "goal_change";
    case Verdict::Command: return "command";
  }
  return "unknown";
}

std::string cortex_user_message(const std::string& goal, const std::string& input) {
  return "CURRENT AGENT GOAL:\n\"" + goal + "\"\n\nUSER INPUT:\n" + input;
}

const Vector& ensure_goal_embedding(GoalState& goal, EmbeddingBackend& embed) {
  if (!goal.goal_embedding) {
    if (trim(goal.goal_text).empty()) throw ContractError("goal has no text");
    goal.goal_embedding = embed.embed({goal.goal_text}).at(0);
  }
  return *goal.goal_embedding;
}

GateDecision gate(const TurnInput& input, const GoalState& goal, const EngineConfig& config,
                  ChatBackend& chat, EmbeddingBackend& embed) {
  input.validate();
  if (trim(goal.goal_text).empty()) throw ContractError("gate needs a goal with text");

  double sim = 0.0;
  try {
    if (goal.goal_embedding) {
      auto v = embed.embed({input.text});
      sim = cosine_similarity(v.at(0), *goal.goal_embedding);
    } else {
      auto v = embed.embed({input.text, goal.goal_text});
      sim = cosine_similarity(v.at(0), v.at(1));
    }
  } catch (const BackendUnavailable& e) {
    throw GateError(std::string("embedding backend unavailable: ") + e.what(), "", true);
  }

  if (!config.gate_enabled) return reflex(input, sim, chat, PromptKind::ReflexUtility);

  if (sim < config.tau_noise) {
    GateDecision d;
    d.verdict = Verdict::Reject;
    d.route = GateRoute::Cortex;
    d.similarity = sim;
    d.reason = "similarity below tau_noise";
    return d;
  }
  if (config.gate_profile == GateProfile::Priority) {
    auto d = priority(input, goal, sim, chat);
    d.route = sim >= config.tau_reflex ? GateRoute::Reflex : GateRoute::Cortex;
    return d;
  }
  if (sim >= config.tau_reflex) return reflex(input, sim, chat, PromptKind::ReflexUtility);
  return cortex(input, goal, sim, chat);
}

GoalState apply_goal_change(const GoalState& goal, const GateDecision& decision,
                            const TurnInput& input) {
  if (decision.verdict != Verdict::GoalChange) {
    throw ContractError(std::string("apply_goal_change needs a goal_change verdict, got ") +
                        to_string(decision.verdict));
  }
  GoalState next = goal;
  next.goal_text = input.text;
  next.updated_at_turn = input.turn_id;
  next.goal_embedding.reset();
  return next;
}

}  // namespace cranimem
