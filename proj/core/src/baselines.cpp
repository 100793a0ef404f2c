#include <cmath>

#include "oms/engine.hpp"
#include "oms/error.hpp"

namespace oms {

namespace {

MultiModalFeature face_part(const MultiModalFeature& f) {
  return apply_mask(f, ModalityMask::face_only());
}

StepRecord static_step(std::int64_t t, const Instance& instance,
                       std::vector<ScoreBreakdown> scores) {
  StepRecord record;
  record.t = t;
  record.instance_id = instance.id;
  record.truth = instance.truth;
  record.gates.kind = ControllerKind::kDisabled;
  record.gates.g1.assign(scores.size(), false);
  FinalizedInstance done;
  done.instance_id = instance.id;
  done.truth = instance.truth;
  done.arrival = t;
  done.finalized_at = t;
  done.scores = scores;
  record.scores = std::move(scores);
  record.finalized.push_back(std::move(done));
  return record;
}

MovieResult assemble(const MovieStream& stream, std::string method, bool online,
                     DecisionTrace trace) {
  MovieResult result;
  result.movie_id = stream.movie_id;
  result.method = std::move(method);
  result.online = online;
  result.cast_ids = stream.cast_ids();
  trace.flush_step = static_cast<std::int64_t>(stream.instances.size());
  result.rankings = build_rankings(result.cast_ids.size(), trace.finalization_order());
  for (const auto& step : trace.steps) result.cache_series.push_back(CacheSample{step.t, 0, 0});
  result.trace = std::move(trace);
  return result;
}

void check_instance(const MemoryBank& bank, const Instance& instance,
                    std::unordered_set<std::string>& seen) {
  if (instance.feature.dim() != bank.dim()) {
    throw DimensionError("instance \"" + instance.id + "\" has dimension " +
                         std::to_string(instance.feature.dim()) + ", expected " +
                         std::to_string(bank.dim()));
  }
  if (!seen.insert(instance.id).second) {
    throw InvalidInput("duplicate instance id \"" + instance.id + "\"");
  }
}

/// Normalized mean of the given modality over `members`, or nothing when no
/// member has it (or the mean cancels out).
std::optional<std::vector<double>> mean_direction(const MovieStream& stream,
                                                  const std::vector<std::size_t>& members,
                                                  Modality m) {
  std::vector<double> sum(stream.dim, 0.0);
  bool any = false;
  for (std::size_t i : members) {
    const auto& f = stream.instances[i].feature;
    if (!f.has(m)) continue;
    any = true;
    const auto v = f.values(m);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v[k];
  }
  if (!any) return std::nullopt;
  const double norm = l2_norm(sum);
  if (norm == 0.0) return std::nullopt;
  for (double& x : sum) x /= norm;
  return sum;
}

}  // namespace

MovieResult face_match(const MovieStream& stream) {
  const MemoryBank bank = MemoryBank::init(stream.casts, MemoryBankOptions{0.0, false});
  DecisionTrace trace;
  std::unordered_set<std::string> seen;
  std::int64_t t = 0;
  for (const auto& instance : stream.instances) {
    check_instance(bank, instance, seen);
    trace.steps.push_back(static_step(t, instance, bank.predict(face_part(instance.feature))));
    ++t;
  }
  return assemble(stream, "face_match", true, std::move(trace));
}

MovieResult two_step(const MovieStream& stream, const TwoStepConfig& config) {
  const MemoryBank bank = MemoryBank::init(stream.casts, MemoryBankOptions{0.0, false});
  const std::size_t casts = bank.cast_count();
  const std::size_t n = stream.instances.size();

  // Pass 1: portrait face matching; confident matches become labels.
  std::vector<std::vector<ScoreBreakdown>> face_scores(n);
  std::vector<std::optional<std::size_t>> label(n);
  std::vector<std::vector<std::size_t>> members(casts);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& instance = stream.instances[i];
    check_instance(bank, instance, seen);
    face_scores[i] = bank.predict(face_part(instance.feature));
    const std::size_t top = best_cast(face_scores[i]);
    if (face_scores[i][top].shared_modalities > 0 &&
        face_scores[i][top].combined >= config.theta1) {
      label[i] = top;
      members[top].push_back(i);
    }
  }

  // Pass 2: per-cast body (and audio) centroids from the labelled set.
  const double w_audio = config.use_audio ? config.w_audio : 0.0;
  std::vector<std::optional<std::vector<double>>> body_mean(casts);
  std::vector<std::optional<std::vector<double>>> audio_mean(casts);
  std::vector<std::string> notes;
  for (std::size_t j = 0; j < casts; ++j) {
    if (members[j].empty()) {
      notes.push_back("cast " + bank.cast_id(j) + ": no confident face match, using face scores");
      continue;
    }
    body_mean[j] = mean_direction(stream, members[j], Modality::kBody);
    if (config.use_audio) audio_mean[j] = mean_direction(stream, members[j], Modality::kAudio);
  }

  DecisionTrace trace;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& instance = stream.instances[i];
    std::vector<ScoreBreakdown> scores = face_scores[i];
    if (!label[i]) {
      for (std::size_t j = 0; j < casts; ++j) {
        if (members[j].empty()) continue;
        ScoreBreakdown s;
        auto add = [&](Modality m, const std::optional<std::vector<double>>& centroid,
                       double weight) {
          if (!centroid || !instance.feature.has(m)) return;
          const std::size_t k = index_of(m);
          s.per_modality[k] = dot(instance.feature.values(m), *centroid);
          s.shared[k] = true;
          ++s.shared_modalities;
          s.combined += weight * s.per_modality[k];
        };
        add(Modality::kBody, body_mean[j], config.w_body);
        if (config.use_audio) add(Modality::kAudio, audio_mean[j], w_audio);
        scores[j] = s;
      }
    }
    trace.steps.push_back(static_step(static_cast<std::int64_t>(i), instance, std::move(scores)));
  }
  auto result = assemble(stream, config.use_audio ? "two_step_fba" : "two_step_fb", false,
                         std::move(trace));
  result.notes = std::move(notes);
  return result;
}

}  // namespace oms
