#include "cranimem/serialization.hpp"

namespace cranimem {

using nlohmann::json;

void to_json(json& j, const UtilityScores& u) {
  j = {{"importance", u.importance},
       {"surprise", u.surprise},
       {"emotion", u.emotion},
       {"base_utility", u.base_utility}};
}

void from_json(const json& j, UtilityScores& u) {
  u.importance = j.at("importance").get<double>();
  u.surprise = j.at("surprise").get<double>();
  u.emotion = j.at("emotion").get<double>();
  u.base_utility = j.at("base_utility").get<double>();
}

void to_json(json& j, const MemoryItem& m) {
  j = {{"item_id", m.item_id},
       {"session_id", m.session_id},
       {"turn_id", m.turn_id},
       {"snippet", m.snippet},
       {"created_at", m.created_at},
       {"entities", m.entities},
       {"utility", m.utility},
       {"access_count", m.access_count},
       {"last_accessed_turn", m.last_accessed_turn},
       {"gate_route", to_string(m.gate_route)},
       {"gate_similarity", m.gate_similarity}};
}

void from_json(const json& j, MemoryItem& m) {
  m.item_id = j.at("item_id").get<std::string>();
  m.session_id = j.at("session_id").get<std::string>();
  m.turn_id = j.at("turn_id").get<std::int64_t>();
  m.snippet = j.at("snippet").get<std::string>();
  m.created_at = j.at("created_at").get<std::int64_t>();
  m.entities = j.at("entities").get<std::vector<std::string>>();
  m.utility = j.at("utility").get<UtilityScores>();
  m.access_count = j.at("access_count").get<std::int64_t>();
  m.last_accessed_turn = j.at("last_accessed_turn").get<std::int64_t>();
  m.gate_route = gate_route_from_string(j.at("gate_route").get<std::string>());
  m.gate_similarity = j.at("gate_similarity").get<double>();
}

void to_json(json& j, const GoalState& g) {
  j = {{"goal_text", g.goal_text}, {"updated_at_turn", g.updated_at_turn}};
  if (g.goal_embedding) j["goal_embedding"] = *g.goal_embedding;
}

void from_json(const json& j, GoalState& g) {
  g.goal_text = j.at("goal_text").get<std::string>();
  g.updated_at_turn = j.at("updated_at_turn").get<std::int64_t>();
  g.goal_embedding.reset();
  if (j.contains("goal_embedding")) g.goal_embedding = j.at("goal_embedding").get<Vector>();
}

void to_json(json& j, const EntityNode& n) {
  j = {{"node_id", n.node_id},
       {"name", n.name},
       {"entity_type", to_string(n.entity_type)},
       {"reinforcement", n.reinforcement},
       {"first_seen_turn", n.first_seen_turn},
       {"last_seen_turn", n.last_seen_turn},
       {"source_item_ids", n.source_item_ids}};
}

void from_json(const json& j, EntityNode& n) {
  n.node_id = j.at("node_id").get<NodeId>();
  n.name = j.at("name").get<std::string>();
  n.entity_type = entity_type_from_string(j.at("entity_type").get<std::string>());
  n.reinforcement = j.at("reinforcement").get<std::int64_t>();
  n.first_seen_turn = j.at("first_seen_turn").get<std::int64_t>();
  n.last_seen_turn = j.at("last_seen_turn").get<std::int64_t>();
  n.source_item_ids = j.at("source_item_ids").get<std::vector<std::string>>();
}

void to_json(json& j, const RelationEdge& e) {
  j = {{"edge_id", e.edge_id},
       {"source_node_id", e.source_node_id},
       {"target_node_id", e.target_node_id},
       {"relation", e.relation},
       {"reinforcement", e.reinforcement},
       {"source_item_ids", e.source_item_ids}};
}

void from_json(const json& j, RelationEdge& e) {
  e.edge_id = j.at("edge_id").get<EdgeId>();
  e.source_node_id = j.at("source_node_id").get<NodeId>();
  e.target_node_id = j.at("target_node_id").get<NodeId>();
  e.relation = j.at("relation").get<std::string>();
  e.reinforcement = j.at("reinforcement").get<std::int64_t>();
  e.source_item_ids = j.at("source_item_ids").get<std::vector<std::string>>();
}

void to_json(json& j, const TrashEntry& t) {
  j = {{"item", t.item}, {"reason", to_string(t.reason)}, {"at_turn", t.at_turn}};
  j["score"] = t.score ? json(*t.score) : json(nullptr);
}

void from_json(const json& j, TrashEntry& t) {
  t.item = j.at("item").get<MemoryItem>();
  t.reason = trash_reason_from_string(j.at("reason").get<std::string>());
  t.at_turn = j.at("at_turn").get<std::int64_t>();
  t.score.reset();
  if (j.contains("score") && !j.at("score").is_null()) t.score = j.at("score").get<double>();
}

void to_json(json& j, const ConsolidationOutcome& o) {
  json scored = json::array();
  for (const auto& [id, s] : o.scored) scored.push_back({{"item_id", id}, {"replay_score", s}});
  json errors = json::array();
  for (const auto& e : o.errors) errors.push_back({{"item_id", e.item_id}, {"message", e.message}});
  j = {{"triggered_at_turn", o.triggered_at_turn},
       {"scored", scored},
       {"promoted", o.promoted},
       {"pruned", o.pruned},
       {"retained", o.retained},
       {"errors", errors},
       {"duration_ms", o.duration_ms}};
}

void from_json(const json& j, ConsolidationOutcome& o) {
  o.triggered_at_turn = j.at("triggered_at_turn").get<std::int64_t>();
  o.scored.clear();
  for (const auto& s : j.at("scored")) {
    o.scored.emplace_back(s.at("item_id").get<std::string>(), s.at("replay_score").get<double>());
  }
  o.promoted = j.at("promoted").get<std::vector<std::string>>();
  o.pruned = j.at("pruned").get<std::vector<std::string>>();
  o.retained = j.at("retained").get<std::vector<std::string>>();
  o.errors.clear();
  for (const auto& e : j.at("errors")) {
    o.errors.push_back({e.at("item_id").get<std::string>(), e.at("message").get<std::string>()});
  }
  o.duration_ms = j.at("duration_ms").get<double>();
}

void to_json(json& j, const GateDecision& d) {
  j = {{"verdict", to_string(d.verdict)},
       {"route", to_string(d.route)},
       {"similarity", d.similarity},
       {"entities", d.entities},
       {"reason", d.reason}};
  j["utility"] = d.utility ? json(*d.utility) : json(nullptr);
  if (!d.warnings.empty()) j["warnings"] = d.warnings;
}

void to_json(json& j, const GraphFact& f) {
  j = {{"edge_id", f.edge_id},
       {"source", f.source},
       {"relation", f.relation},
       {"target", f.target},
       {"reinforcement", f.reinforcement},
       {"hop", f.hop},
       {"rendered", f.rendered()}};
}

void to_json(json& j, const ContextBlock& b) {
  json episodic = json::array();
  for (const auto& e : b.episodic_section) {
    episodic.push_back({{"item_id", e.item_id},
                        {"turn_id", e.turn_id},
                        {"snippet", e.snippet},
                        {"similarity", e.similarity}});
  }
  j = {{"episodic_section", episodic},
       {"semantic_section", b.semantic_section},
       {"total_chars", b.total_chars},
       {"truncated", b.truncated},
       {"degraded", b.degraded},
       {"warnings", b.warnings},
       {"rendered", b.render()}};
}

}  // namespace cranimem
