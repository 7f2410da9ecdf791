#include "cranimem/consolidation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"
#include "cranimem/text.hpp"

namespace cranimem {

namespace {
std::set<std::string> entity_keys(const MemoryItem& item) {
  std::set<std::string> keys;
  for (const auto& e : item.entities) {
    auto k = normalize_name(e);
    if (!k.empty()) keys.insert(std::move(k));
  }
  return keys;
}

bool overlaps(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& k : a) {
    if (b.count(k)) return true;
  }
  return false;
}
}  // namespace

const char* to_string(TrashReason reason) {
  return reason == TrashReason::Capacity ? "capacity" : "pruned";
}

TrashReason trash_reason_from_string(const std::string& s) {
  if (s == "capacity") return TrashReason::Capacity;
  if (s == "pruned") return TrashReason::Pruned;
  throw DomainError("reason", "unknown trash reason '" + s + "'");
}

double freq_bonus(const MemoryItem& item, const std::vector<MemoryItem>& cohort, double cap) {
  if (!(cap >= 0.0)) throw DomainError("freq_bonus_cap", "must be >= 0");
  const auto self = std::find_if(cohort.begin(), cohort.end(),
                                 [&](const MemoryItem& m) { return m.item_id == item.item_id; });
  if (self == cohort.end()) throw ContractError("freq_bonus: item '" + item.item_id + "' is not in the cohort");

  const auto mine = entity_keys(item);
  std::int64_t repeats = 0;
  if (!mine.empty()) {
    for (const auto& other : cohort) {
      if (other.item_id == item.item_id) continue;
      if (overlaps(mine, entity_keys(other))) ++repeats;
    }
  }
  const double access_term = std::log1p(static_cast<double>(std::max<std::int64_t>(0, item.access_count)));
  return std::min(cap, static_cast<double>(repeats) + access_term);
}

UpsertReport ExtractionLinkage::link(const MemoryItem& item, KnowledgeGraph& graph, std::int64_t turn) {
  auto extraction = extract(item.snippet, *chat_);
  return graph.upsert(extraction, item.item_id, turn);
}

ConsolidationOutcome run_consolidation(EpisodicBuffer& buffer, KnowledgeGraph& graph,
                                       TrashLog& trash, const EngineConfig& config,
                                       LinkageEngine& linkage, std::int64_t turn) {
  const auto start = std::chrono::steady_clock::now();
  ConsolidationOutcome outcome;
  outcome.triggered_at_turn = turn;

  const auto snapshot = buffer.candidates();
  const double tau = config.tau_consolidation;
  const double floor = config.effective_prune_floor();

  KnowledgeGraph staged = graph;
  std::vector<TrashEntry> trashed;
  for (const auto& item : snapshot) {
    const double bonus = freq_bonus(item, snapshot, config.freq_bonus_cap);
    const double score = replay_score(item, bonus, config.alpha);
    outcome.scored.emplace_back(item.item_id, score);
    if (score > tau) {
      try {
        linkage.link(item, staged, turn);
        outcome.promoted.push_back(item.item_id);
      } catch (const StoreCorruption&) {
        throw;
      } catch (const MockMiss&) {
        throw;
      } catch (const std::exception& e) {
        spdlog::warn("consolidation: linkage failed for {}: {}", item.item_id, e.what());
        outcome.errors.push_back({item.item_id, e.what()});
        outcome.retained.push_back(item.item_id);
      }
    } else if (score < floor) {
      outcome.pruned.push_back(item.item_id);
      trashed.push_back({item, TrashReason::Pruned, turn, score});
    } else {
      outcome.retained.push_back(item.item_id);
    }
  }

  graph = std::move(staged);
  std::vector<std::string> removed = outcome.promoted;
  removed.insert(removed.end(), outcome.pruned.begin(), outcome.pruned.end());
  buffer.remove(removed);
  for (auto& t : trashed) trash.append(std::move(t));

  outcome.duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

bool should_trigger(std::int64_t turn, std::int64_t last_run_turn, bool idle,
                    const EngineConfig& config) {
  if (turn < last_run_turn) throw ContractError("should_trigger: turn precedes last run");
  return idle || (turn - last_run_turn) >= config.consolidation_period;
}

}  // namespace cranimem
