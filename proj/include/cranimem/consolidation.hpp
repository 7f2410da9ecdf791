#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cranimem/backends.hpp"
#include "cranimem/buffer.hpp"
#include "cranimem/config.hpp"
#include "cranimem/graph.hpp"

namespace cranimem {

enum class TrashReason { Capacity, Pruned };

const char* to_string(TrashReason reason);
TrashReason trash_reason_from_string(const std::string& s);

struct TrashEntry {
  MemoryItem item;
  TrashReason reason = TrashReason::Capacity;
  std::int64_t at_turn = 0;
  std::optional<double> score;  // set for pruned entries

  bool operator==(const TrashEntry&) const = default;
};

// Append-only audit stream of everything the engine forgets.
class TrashLog {
 public:
  void append(TrashEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<TrashEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  static TrashLog restore(std::vector<TrashEntry> entries) {
    TrashLog log;
    log.entries_ = std::move(entries);
    return log;
  }

  bool operator==(const TrashLog&) const = default;

 private:
  std::vector<TrashEntry> entries_;
};

struct ItemError {
  std::string item_id;
  std::string message;

  bool operator==(const ItemError&) const = default;
};

struct ConsolidationOutcome {
  std::int64_t triggered_at_turn = 0;
  std::vector<std::pair<std::string, double>> scored;
  std::vector<std::string> promoted;
  std::vector<std::string> pruned;
  std::vector<std::string> retained;
  std::vector<ItemError> errors;
  double duration_ms = 0.0;

  bool operator==(const ConsolidationOutcome&) const = default;
};

// min(cap, entity_repeats + ln(1 + access_count)), where entity_repeats
// counts the other cohort items sharing at least one normalized entity.
double freq_bonus(const MemoryItem& item, const std::vector<MemoryItem>& cohort, double cap);

// Turns one promoted memory into graph facts.
class LinkageEngine {
 public:
  virtual ~LinkageEngine() = default;
  virtual UpsertReport link(const MemoryItem& item, KnowledgeGraph& graph, std::int64_t turn) = 0;
};

// extract() + upsert().
class ExtractionLinkage final : public LinkageEngine {
 public:
  explicit ExtractionLinkage(std::shared_ptr<ChatBackend> chat) : chat_(std::move(chat)) {}
  UpsertReport link(const MemoryItem& item, KnowledgeGraph& graph, std::int64_t turn) override;

 private:
  std::shared_ptr<ChatBackend> chat_;
};

// Scores every buffered item against the snapshot cohort and partitions it:
//   score > tau_consolidation      promoted into the graph, removed from buffer
//   score < prune_floor            pruned to the trash log
//   otherwise                      retained for a later cycle
// A linkage failure keeps the item in the buffer and is reported in
// `errors`. StoreCorruption aborts the run with buffer, graph and trash
// untouched.
ConsolidationOutcome run_consolidation(EpisodicBuffer& buffer, KnowledgeGraph& graph,
                                       TrashLog& trash, const EngineConfig& config,
                                       LinkageEngine& linkage, std::int64_t turn);

bool should_trigger(std::int64_t turn, std::int64_t last_run_turn, bool idle,
                    const EngineConfig& config);

}  // namespace cranimem
