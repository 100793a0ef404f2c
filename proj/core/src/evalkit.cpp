#include "oms/evalkit.hpp"

#include <cmath>
#include <unordered_map>

#include "oms/error.hpp"

namespace oms {

std::optional<double> average_precision(const std::vector<bool>& relevance) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (!relevance[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

std::vector<RecallPoint> recall_at_k_curve(const DecisionTrace& trace, std::size_t k) {
  std::vector<RecallPoint> curve;
  std::size_t seen = 0;
  std::size_t hits = 0;
  for (const auto& item : trace.finalization_order()) {
    if (!item.truth.is_cast()) continue;
    const std::size_t truth = item.truth.cast;
    const double own = item.scores.at(truth).combined;
    // Position of the true cast when casts are sorted by score, ties by index.
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < item.scores.size(); ++j) {
      const double s = item.scores[j].combined;
      if (s > own || (s == own && j < truth)) ++ahead;
    }
    ++seen;
    if (ahead < k) ++hits;
    curve.push_back(
        RecallPoint{item.finalized_at, static_cast<double>(hits) / static_cast<double>(seen)});
  }
  return curve;
}

UpdateStats update_similarity_stats(std::span<const MemoryUpdateEvent> log) {
  UpdateStats stats;
  for (Modality m : kModalities) {
    const std::size_t k = index_of(m);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : log) {
      if (!e.similarity.shared[k]) continue;
      sum += e.similarity.per_modality[k];
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (const auto& e : log) {
      if (!e.similarity.shared[k]) continue;
      const double d = e.similarity.per_modality[k] - mean;
      var += d * d;
    }
    stats[k] = ModalityStats{mean, std::sqrt(var / static_cast<double>(n)), n};
  }
  return stats;
}

MovieEval map_per_movie(const MovieResult& result) {
  std::unordered_map<std::string, GroundTruth> truth;
  for (const auto& item : result.trace.finalization_order()) {
    if (!item.truth.labeled()) {
      throw InvalidInput("movie \"" + result.movie_id + "\": instance \"" + item.instance_id +
                         "\" has no ground truth");
    }
    truth[item.instance_id] = item.truth;
  }
  MovieEval eval;
  eval.movie_id = result.movie_id;
  eval.instances = truth.size();
  double sum = 0.0;
  std::size_t queries = 0;
  for (std::size_t j = 0; j < result.rankings.size(); ++j) {
    std::vector<bool> relevance;
    relevance.reserve(result.rankings[j].size());
    for (const auto& entry : result.rankings[j]) {
      const auto it = truth.find(entry.instance_id);
      if (it == truth.end()) {
        throw InvalidInput("movie \"" + result.movie_id + "\": ranked instance \"" +
                           entry.instance_id + "\" missing from the trace");
      }
      relevance.push_back(it->second.is_cast(j));
    }
    const auto ap = average_precision(relevance);
    eval.query_ap.push_back(ap);
    if (ap) {
      sum += *ap;
      ++queries;
    }
  }
  if (queries > 0) eval.map = sum / static_cast<double>(queries);
  return eval;
}

std::optional<double> macro_mean(std::span<const MovieEval> movies) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : movies) {
    if (!m.map) continue;
    sum += *m.map;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

EvalReport evaluate(std::span<const MovieResult> results) {
  EvalReport report;
  std::vector<MemoryUpdateEvent> pooled;
  double cache_sum = 0.0;
  for (const auto& result : results) {
    if (report.movies.empty()) {
      report.method = result.method;
      report.online = result.online;
    }
    MovieEval eval = map_per_movie(result);
    for (std::size_t k : kRecallKs) eval.recall[k] = recall_at_k_curve(result.trace, k);
    eval.mean_cache_size = result.mean_cache_size();
    eval.update_stats = update_similarity_stats(result.update_log);
    pooled.insert(pooled.end(), result.update_log.begin(), result.update_log.end());
    cache_sum += eval.mean_cache_size;
    report.movies.push_back(std::move(eval));
  }
  report.mean_map = macro_mean(report.movies);
  if (!results.empty()) report.mean_cache_size = cache_sum / static_cast<double>(results.size());
  report.update_stats = update_similarity_stats(pooled);
  return report;
}

}  // namespace oms
