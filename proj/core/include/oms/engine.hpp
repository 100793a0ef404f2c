#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "oms/controller.hpp"
#include "oms/feature.hpp"
#include "oms/memory_bank.hpp"
#include "oms/stream.hpp"
#include "oms/uncertain_cache.hpp"

namespace oms {

struct EngineConfig {
  MemoryBankOptions memory;
  bool cache_enabled = true;
  /// Modalities stripped from every instance before it is scored.
  ModalityMask modalities;
};

enum class Finalization { kImmediate, kReleased, kFlushed };
std::string_view finalization_name(Finalization how);

/// The score vector an instance is ranked with, fixed when it is decided.
struct FinalizedInstance {
  std::string instance_id;
  GroundTruth truth;
  std::int64_t arrival = 0;
  std::int64_t finalized_at = 0;
  Finalization how = Finalization::kImmediate;
  std::vector<ScoreBreakdown> scores;
};

struct GateDecision {
  ControllerKind kind = ControllerKind::kManual;
  std::vector<bool> g1;        // one bit per cast
  std::optional<bool> g2;      // set when the cache gate was consulted
  std::vector<std::pair<std::string, bool>> g3;  // per cached instance, on update steps
};

struct StepRecord {
  std::int64_t t = 0;
  std::string instance_id;
  GroundTruth truth;
  std::vector<ScoreBreakdown> scores;
  GateDecision gates;
  std::optional<std::size_t> updated_cast;
  bool pushed = false;
  std::vector<std::string> released;
  /// Instances finalized during this step, current instance first.
  std::vector<FinalizedInstance> finalized;
};

struct DecisionTrace {
  std::vector<StepRecord> steps;
  std::int64_t flush_step = 0;
  std::vector<FinalizedInstance> flushed;

  /// Every finalized instance in the order decisions were made.
  [[nodiscard]] std::vector<FinalizedInstance> finalization_order() const;
};

struct CacheSample {
  std::int64_t t = 0;
  std::size_t total = 0;    // cumulative pushes
  std::size_t current = 0;  // entries held after the step

  friend bool operator==(const CacheSample&, const CacheSample&) = default;
};

struct RankedEntry {
  std::string instance_id;
  double score = 0.0;
  std::int64_t finalized_at = 0;
};

struct MovieResult {
  std::string movie_id;
  std::string method;
  bool online = true;
  std::vector<std::string> cast_ids;
  /// rankings[j] lists every instance for cast j, best first.
  std::vector<std::vector<RankedEntry>> rankings;
  DecisionTrace trace;
  std::vector<MemoryUpdateEvent> update_log;
  std::vector<CacheSample> cache_series;
  std::optional<MemoryBank> final_memory;
  /// Non-fatal remarks (e.g. a baseline falling back to face scores).
  std::vector<std::string> notes;

  [[nodiscard]] double mean_cache_size() const;
};

/// Sorts finalized instances into one ranking per cast: combined score
/// descending, then earlier finalization, then instance id.
std::vector<std::vector<RankedEntry>> build_rankings(std::size_t cast_count,
                                                     const std::vector<FinalizedInstance>& items);

/// Mutable state of one online pass over a movie.
class MovieRun {
 public:
  MovieRun(const MovieStream& stream, const EngineConfig& config, const GatePolicy& policy);

  /// Processes the next instance (Throws DimensionError / InvalidInput on a
  /// bad dimension or a repeated id).
  const StepRecord& step(const Instance& instance);
  /// Flushes the cache and assembles the result.
  MovieResult finish(std::string method = "oms") &&;

  [[nodiscard]] std::int64_t now() const { return now_; }
  [[nodiscard]] const MemoryBank& bank() const { return bank_; }
  [[nodiscard]] const UncertainCache& cache() const { return cache_; }
  [[nodiscard]] const DecisionTrace& trace() const { return trace_; }

 private:
  FinalizedInstance finalize(const CacheEntry& entry, const std::vector<ScoreBreakdown>& scores,
                             Finalization how) const;

  std::string movie_id_;
  EngineConfig config_;
  const GatePolicy& policy_;
  MemoryBank bank_;
  UncertainCache cache_;
  std::int64_t now_ = 0;
  std::unordered_set<std::string> seen_;
  std::unordered_map<std::string, GroundTruth> cached_truth_;
  DecisionTrace trace_;
  std::vector<CacheSample> cache_series_;
};

MovieResult run_movie(const MovieStream& stream, const GatePolicy& policy,
                      const EngineConfig& config, std::string method = "oms");

/// Static portrait-face matching: no memory, no cache.
MovieResult face_match(const MovieStream& stream);

struct TwoStepConfig {
  bool use_audio = false;
  /// Face score a first-pass label needs.
  double theta1 = 0.8;
  double w_body = 0.9;
  double w_audio = 0.1;
};

/// Offline two-pass baseline: confident face matches are labelled, then
/// the rest are scored against per-cast mean body (and audio) features.
MovieResult two_step(const MovieStream& stream, const TwoStepConfig& config);

}  // namespace oms
