#include "cranimem/buffer.hpp"

#include <algorithm>

#include "cranimem/errors.hpp"

namespace cranimem {

EpisodicBuffer::EpisodicBuffer(std::int64_t capacity) : capacity_(capacity) {
  if (capacity_ <= 0) throw DomainError("buffer_capacity", "must be positive");
}

EvictionReport EpisodicBuffer::write(MemoryItem item) {
  if (ids_.count(item.item_id)) throw DuplicateItemError("item '" + item.item_id + "' already buffered");
  ids_.insert(item.item_id);
  items_.push_back(std::move(item));
  EvictionReport report;
  if (static_cast<std::int64_t>(items_.size()) > capacity_) {
    report.evicted = std::move(items_.front());
    items_.pop_front();
    ids_.erase(report.evicted->item_id);
    ++evicted_count_;
  }
  return report;
}

std::vector<MemoryItem> EpisodicBuffer::recent(std::size_t k, std::int64_t turn) {
  std::vector<MemoryItem> out;
  const std::size_t n = std::min(k, items_.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& item = items_[items_.size() - 1 - i];
    ++item.access_count;
    item.last_accessed_turn = turn;
    out.push_back(item);
  }
  return out;
}

std::size_t EpisodicBuffer::remove(const std::vector<std::string>& ids) {
  std::unordered_set<std::string> doomed;
  for (const auto& id : ids) {
    if (ids_.count(id)) doomed.insert(id);
  }
  if (doomed.empty()) return 0;
  std::erase_if(items_, [&](const MemoryItem& m) { return doomed.count(m.item_id) != 0; });
  for (const auto& id : doomed) ids_.erase(id);
  return doomed.size();
}

void EpisodicBuffer::mark_accessed(const std::vector<std::string>& ids, std::int64_t turn) {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  for (auto& item : items_) {
    if (wanted.count(item.item_id)) {
      ++item.access_count;
      item.last_accessed_turn = turn;
    }
  }
}

EpisodicBuffer EpisodicBuffer::restore(std::int64_t capacity, std::vector<MemoryItem> items,
                                       std::int64_t evicted_count) {
  EpisodicBuffer buffer(capacity);
  if (static_cast<std::int64_t>(items.size()) > capacity) {
    throw ContractError("restored buffer holds more items than its capacity");
  }
  if (evicted_count < 0) throw ContractError("restored buffer has a negative eviction count");
  for (auto& item : items) {
    if (item.access_count < 0) throw ContractError("restored item has negative access_count");
    if (!buffer.ids_.insert(item.item_id).second) {
      throw ContractError("restored buffer repeats item '" + item.item_id + "'");
    }
    buffer.items_.push_back(std::move(item));
  }
  buffer.evicted_count_ = evicted_count;
  return buffer;
}

}  // namespace cranimem
