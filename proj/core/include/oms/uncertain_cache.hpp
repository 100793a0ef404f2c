#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "oms/feature.hpp"
#include "oms/memory_bank.hpp"

namespace oms {

struct CacheEntry {
  std::string instance_id;
  MultiModalFeature feature;
  std::int64_t inserted_at = 0;
  std::vector<ScoreBreakdown> last_scores;
};

/// A cache entry leaving the cache, with the per-cast scores it keeps.
struct ResolvedEntry {
  CacheEntry entry;
  std::vector<ScoreBreakdown> scores;
};

/// Release decision for one cached instance: (scores against the current
/// memory, age in engine steps) -> leave the cache?
using ReleaseGate = std::function<bool(std::span<const ScoreBreakdown>, std::int64_t)>;

struct RecallOutcome {
  std::vector<ResolvedEntry> released;
  /// One (instance id, bit) per entry present at recall time, cache order.
  std::vector<std::pair<std::string, bool>> bits;
};

/// Holding area for instances no gate could settle. Re-scored against the
/// memory every time the memory changes.
class UncertainCache {
 public:
  /// Throws InvalidInput if `instance_id` is already cached.
  void push(MultiModalFeature feature, std::string instance_id, std::int64_t step,
            std::vector<ScoreBreakdown> scores = {});

  /// Re-scores every entry against `bank`; entries whose gate fires leave
  /// with those scores. Remaining entries keep their order.
  RecallOutcome recall(const MemoryBank& bank, std::int64_t now, const ReleaseGate& gate);

  /// Scores everything left against the final memory and empties the cache.
  std::vector<ResolvedEntry> flush(const MemoryBank& bank);

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] const std::vector<CacheEntry>& entries() const { return entries_; }
  [[nodiscard]] std::size_t push_count() const { return push_count_; }
  [[nodiscard]] std::size_t released_count() const { return released_count_; }
  [[nodiscard]] std::size_t flushed_count() const { return flushed_count_; }

 private:
  std::vector<CacheEntry> entries_;
  std::unordered_set<std::string> ids_;
  std::size_t push_count_ = 0;
  std::size_t released_count_ = 0;
  std::size_t flushed_count_ = 0;
};

}  // namespace oms
