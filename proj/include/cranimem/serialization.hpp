#pragma once

#include <json.hpp>

#include "cranimem/consolidation.hpp"
#include "cranimem/core.hpp"
#include "cranimem/gating.hpp"
#include "cranimem/graph.hpp"
#include "cranimem/retrieval.hpp"

// nlohmann ADL hooks for the engine's record types. These are the on-disk
// and on-wire field names; see docs/FORMATS.md.
namespace cranimem {

void to_json(nlohmann::json& j, const UtilityScores& u);
void from_json(const nlohmann::json& j, UtilityScores& u);

void to_json(nlohmann::json& j, const MemoryItem& m);
void from_json(const nlohmann::json& j, MemoryItem& m);

void to_json(nlohmann::json& j, const GoalState& g);
void from_json(const nlohmann::json& j, GoalState& g);

void to_json(nlohmann::json& j, const EntityNode& n);
void from_json(const nlohmann::json& j, EntityNode& n);

void to_json(nlohmann::json& j, const RelationEdge& e);
void from_json(const nlohmann::json& j, RelationEdge& e);

void to_json(nlohmann::json& j, const TrashEntry& t);
void from_json(const nlohmann::json& j, TrashEntry& t);

void to_json(nlohmann::json& j, const ConsolidationOutcome& o);
void from_json(const nlohmann::json& j, ConsolidationOutcome& o);

void to_json(nlohmann::json& j, const GateDecision& d);

void to_json(nlohmann::json& j, const GraphFact& f);
void to_json(nlohmann::json& j, const ContextBlock& b);

}  // namespace cranimem
