#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "cranimem/core.hpp"

namespace cranimem {

struct EvictionReport {
  std::optional<MemoryItem> evicted;
};

// Bounded FIFO store of accepted traces, oldest first. Eviction ignores
// utility; utility-aware removal belongs to consolidation.
class EpisodicBuffer {
 public:
  explicit EpisodicBuffer(std::int64_t capacity);

  // Throws DuplicateItemError if the id is already buffered.
  EvictionReport write(MemoryItem item);

  // Newest first; bumps access metadata on each returned item.
  std::vector<MemoryItem> recent(std::size_t k, std::int64_t turn);

  // Snapshot copy, access counters untouched.
  std::vector<MemoryItem> candidates() const { return {items_.begin(), items_.end()}; }

  // Removes by id, skipping ids no longer present. Returns how many went.
  std::size_t remove(const std::vector<std::string>& ids);

  void mark_accessed(const std::vector<std::string>& ids, std::int64_t turn);

  bool contains(const std::string& id) const { return ids_.count(id) != 0; }
  const std::deque<MemoryItem>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  std::int64_t capacity() const noexcept { return capacity_; }
  std::int64_t evicted_count() const noexcept { return evicted_count_; }

  // Rebuilds persisted state; throws ContractError if it breaks invariants.
  static EpisodicBuffer restore(std::int64_t capacity, std::vector<MemoryItem> items,
                                std::int64_t evicted_count);

  bool operator==(const EpisodicBuffer& other) const {
    return capacity_ == other.capacity_ && evicted_count_ == other.evicted_count_ &&
           items_ == other.items_;
  }

 private:
  std::int64_t capacity_;
  std::int64_t evicted_count_ = 0;
  std::deque<MemoryItem> items_;
  std::unordered_set<std::string> ids_;
};

}  // namespace cranimem
