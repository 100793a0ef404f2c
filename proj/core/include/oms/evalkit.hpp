#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oms/engine.hpp"
#include "oms/feature.hpp"
#include "oms/memory_bank.hpp"

namespace oms {

/// Mean of precision@i over relevant positions i. Empty when nothing in
/// the list is relevant (such queries are left out of mAP).
std::optional<double> average_precision(const std::vector<bool>& relevance);

struct RecallPoint {
  std::int64_t t = 0;  // finalization step
  double recall = 0.0;

  friend bool operator==(const RecallPoint&, const RecallPoint&) = default;
};

/// Cumulative R@k: after each finalization of a cast-labelled instance, the
/// fraction of such instances so far whose true cast is in the top k of
/// their final scores (ties broken by cast index). Distractor and
/// unlabelled instances are skipped.
std::vector<RecallPoint> recall_at_k_curve(const DecisionTrace& trace, std::size_t k);

struct ModalityStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};
using UpdateStats = std::array<std::optional<ModalityStats>, kModalityCount>;

/// Per-modality mean/std of the similarity at memory-update time, over the
/// events where that modality was comparable.
UpdateStats update_similarity_stats(std::span<const MemoryUpdateEvent> log);

struct MovieEval {
  std::string movie_id;
  std::optional<double> map;
  /// One entry per cast query; empty for queries with no relevant instance.
  std::vector<std::optional<double>> query_ap;
  std::map<std::size_t, std::vector<RecallPoint>> recall;
  double mean_cache_size = 0.0;
  UpdateStats update_stats;
  std::size_t instances = 0;
};

struct EvalReport {
  std::string method;
  bool online = true;
  std::vector<MovieEval> movies;
  /// Unweighted mean over movies that have a defined mAP.
  std::optional<double> mean_map;
  double mean_cache_size = 0.0;
  UpdateStats update_stats;  // pooled over all movies
};

inline constexpr std::array<std::size_t, 3> kRecallKs = {1, 3, 5};

/// Per-movie mAP of one result. Throws InvalidInput if an instance lacks
/// ground truth.
MovieEval map_per_movie(const MovieResult& result);

/// Full report: per-movie mAP, macro mean, R@k curves, cache and
/// update-similarity statistics.
EvalReport evaluate(std::span<const MovieResult> results);

std::optional<double> macro_mean(std::span<const MovieEval> movies);

}  // namespace oms
