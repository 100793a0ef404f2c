#include "oms/engine.hpp"

#include <algorithm>
#include <numeric>

#include "oms/error.hpp"

namespace oms {

std::vector<std::string> MovieStream::cast_ids() const {
  std::vector<std::string> ids;
  ids.reserve(casts.size());
  for (const auto& c : casts) ids.push_back(c.cast_id);
  return ids;
}

bool MovieStream::fully_labeled() const {
  return std::all_of(instances.begin(), instances.end(),
                     [](const Instance& i) { return i.truth.labeled(); });
}

std::string_view finalization_name(Finalization how) {
  switch (how) {
    case Finalization::kImmediate:
      return "immediate";
    case Finalization::kReleased:
      return "released";
    case Finalization::kFlushed:
      return "flushed";
  }
  return "unknown";
}

std::vector<FinalizedInstance> DecisionTrace::finalization_order() const {
  std::vector<FinalizedInstance> out;
  for (const auto& step : steps) {
    out.insert(out.end(), step.finalized.begin(), step.finalized.end());
  }
  out.insert(out.end(), flushed.begin(), flushed.end());
  return out;
}

double MovieResult::mean_cache_size() const {
  if (cache_series.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : cache_series) sum += static_cast<double>(s.current);
  return sum / static_cast<double>(cache_series.size());
}

std::vector<std::vector<RankedEntry>> build_rankings(std::size_t cast_count,
                                                     const std::vector<FinalizedInstance>& items) {
  std::vector<std::vector<RankedEntry>> rankings(cast_count);
  for (std::size_t j = 0; j < cast_count; ++j) {
    auto& ranking = rankings[j];
    ranking.reserve(items.size());
    for (const auto& item : items) {
      ranking.push_back(RankedEntry{item.instance_id, item.scores.at(j).combined,
                                    item.finalized_at});
    }
    std::sort(ranking.begin(), ranking.end(), [](const RankedEntry& a, const RankedEntry& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.finalized_at != b.finalized_at) return a.finalized_at < b.finalized_at;
      return a.instance_id < b.instance_id;
    });
  }
  return rankings;
}

MovieRun::MovieRun(const MovieStream& stream, const EngineConfig& config,
                   const GatePolicy& policy)
    : movie_id_(stream.movie_id),
      config_(config),
      policy_(policy),
      bank_(MemoryBank::init(stream.casts, config.memory)) {
  if (bank_.dim() != stream.dim) {
    throw DimensionError("portraits have dimension " + std::to_string(bank_.dim()) +
                         " but the stream declares " + std::to_string(stream.dim));
  }
}

FinalizedInstance MovieRun::finalize(const CacheEntry& entry,
                                     const std::vector<ScoreBreakdown>& scores,
                                     Finalization how) const {
  FinalizedInstance out;
  out.instance_id = entry.instance_id;
  out.arrival = entry.inserted_at;
  out.finalized_at = now_;
  out.how = how;
  out.scores = scores;
  const auto it = cached_truth_.find(entry.instance_id);
  if (it != cached_truth_.end()) out.truth = it->second;
  return out;
}

const StepRecord& MovieRun::step(const Instance& instance) {
  if (instance.feature.dim() != bank_.dim()) {
    throw DimensionError("instance \"" + instance.id + "\" has dimension " +
                         std::to_string(instance.feature.dim()) + ", expected " +
                         std::to_string(bank_.dim()));
  }
  if (!seen_.insert(instance.id).second) {
    throw InvalidInput("duplicate instance id \"" + instance.id + "\"");
  }
  const MultiModalFeature f = apply_mask(instance.feature, config_.modalities);

  StepRecord record;
  record.t = now_;
  record.instance_id = instance.id;
  record.truth = instance.truth;
  record.scores = bank_.predict(f);
  record.gates.kind = policy_.kind();

  const GateContext ctx{bank_, f, record.scores, now_};
  const std::size_t casts = bank_.cast_count();
  record.gates.g1.resize(casts);
  std::optional<std::size_t> chosen;
  for (std::size_t j = 0; j < casts; ++j) {
    const bool fire = policy_.update_gate(ctx, j);
    record.gates.g1[j] = fire;
    if (fire && (!chosen || record.scores[j].combined > record.scores[*chosen].combined)) {
      chosen = j;
    }
  }

  auto immediate = [&] {
    FinalizedInstance done;
    done.instance_id = instance.id;
    done.truth = instance.truth;
    done.arrival = now_;
    done.finalized_at = now_;
    done.how = Finalization::kImmediate;
    done.scores = record.scores;
    record.finalized.push_back(std::move(done));
  };

  if (chosen) {
    bank_.apply_update(*chosen, f, true, now_);
    record.updated_cast = chosen;
    immediate();
    if (!cache_.empty()) {
      auto outcome = cache_.recall(
          bank_, now_, [this](std::span<const ScoreBreakdown> s, std::int64_t age) {
            return policy_.release_gate(s, age);
          });
      record.gates.g3 = std::move(outcome.bits);
      for (auto& resolved : outcome.released) {
        record.released.push_back(resolved.entry.instance_id);
        record.finalized.push_back(
            finalize(resolved.entry, resolved.scores, Finalization::kReleased));
        cached_truth_.erase(resolved.entry.instance_id);
      }
    }
  } else {
    bool cache_it = false;
    if (config_.cache_enabled) {
      cache_it = policy_.cache_gate(ctx);
      record.gates.g2 = cache_it;
    }
    if (cache_it) {
      cache_.push(f, instance.id, now_, record.scores);
      cached_truth_[instance.id] = instance.truth;
      record.pushed = true;
    } else {
      immediate();
    }
  }

  cache_series_.push_back(CacheSample{now_, cache_.push_count(), cache_.size()});
  ++now_;
  trace_.steps.push_back(std::move(record));
  return trace_.steps.back();
}

MovieResult MovieRun::finish(std::string method) && {
  trace_.flush_step = now_;
  for (auto& resolved : cache_.flush(bank_)) {
    trace_.flushed.push_back(finalize(resolved.entry, resolved.scores, Finalization::kFlushed));
  }
  cached_truth_.clear();

  MovieResult result;
  result.movie_id = movie_id_;
  result.method = std::move(method);
  result.online = true;
  result.cast_ids = bank_.cast_ids();
  result.rankings = build_rankings(bank_.cast_count(), trace_.finalization_order());
  result.update_log = bank_.update_log();
  result.cache_series = std::move(cache_series_);
  result.trace = std::move(trace_);
  result.final_memory = std::move(bank_);
  return result;
}

MovieResult run_movie(const MovieStream& stream, const GatePolicy& policy,
                      const EngineConfig& config, std::string method) {
  MovieRun run(stream, config, policy);
  for (const auto& instance : stream.instances) run.step(instance);
  return std::move(run).finish(std::move(method));
}

}  // namespace oms
