#include "oms/uncertain_cache.hpp"

#include "oms/error.hpp"

namespace oms {

void UncertainCache::push(MultiModalFeature feature, std::string instance_id, std::int64_t step,
                          std::vector<ScoreBreakdown> scores) {
  if (ids_.contains(instance_id)) {
    throw InvalidInput("instance \"" + instance_id + "\" is already cached");
  }
  ids_.insert(instance_id);
  entries_.push_back(
      CacheEntry{std::move(instance_id), std::move(feature), step, std::move(scores)});
  ++push_count_;
}

RecallOutcome UncertainCache::recall(const MemoryBank& bank, std::int64_t now,
                                     const ReleaseGate& gate) {
  RecallOutcome out;
  out.bits.reserve(entries_.size());
  std::vector<CacheEntry> kept;
  kept.reserve(entries_.size());
  for (auto& entry : entries_) {
    auto scores = bank.predict(entry.feature);
    const bool release = gate(scores, now - entry.inserted_at);
    out.bits.emplace_back(entry.instance_id, release);
    if (release) {
      ids_.erase(entry.instance_id);
      out.released.push_back(ResolvedEntry{std::move(entry), std::move(scores)});
    } else {
      entry.last_scores = std::move(scores);
      kept.push_back(std::move(entry));
    }
  }
  entries_ = std::move(kept);
  released_count_ += out.released.size();
  return out;
}

std::vector<ResolvedEntry> UncertainCache::flush(const MemoryBank& bank) {
  std::vector<ResolvedEntry> out;
  out.reserve(entries_.size());
  for (auto& entry : entries_) {
    auto scores = bank.predict(entry.feature);
    out.push_back(ResolvedEntry{std::move(entry), std::move(scores)});
  }
  entries_.clear();
  ids_.clear();
  flushed_count_ += out.size();
  return out;
}

}  // namespace oms
