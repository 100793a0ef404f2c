#include "oms/memory_bank.hpp"

#include <string>
#include <unordered_set>

#include "oms/error.hpp"

namespace oms {

MemoryBank MemoryBank::init(std::span<const CastPortrait> portraits, MemoryBankOptions options) {
  if (portraits.empty()) throw InvalidInput("memory bank needs at least one cast");
  if (!(options.mu >= 0.0 && options.mu <= 1.0)) {
    throw InvalidInput("updating factor mu must lie in [0, 1]");
  }
  MemoryBank bank;
  bank.options_ = options;
  bank.dim_ = portraits.front().feature.dim();
  std::unordered_set<std::string> seen;
  for (const auto& p : portraits) {
    if (!seen.insert(p.cast_id).second) {
      throw InvalidInput("duplicate cast id \"" + p.cast_id + "\"");
    }
    if (!p.feature.has(Modality::kFace)) {
      throw InvalidInput("portrait requires face feature (cast \"" + p.cast_id + "\")");
    }
    if (p.feature.dim() != bank.dim_) {
      throw DimensionError("portrait of cast \"" + p.cast_id + "\" has dimension " +
                           std::to_string(p.feature.dim()) + ", expected " +
                           std::to_string(bank.dim_));
    }
    MultiModalFeature face_only(bank.dim_);
    const auto face = p.feature.values(Modality::kFace);
    face_only.set(Modality::kFace, std::vector<double>(face.begin(), face.end()));
    bank.cast_ids_.push_back(p.cast_id);
    bank.rows_.push_back(normalize_feature(std::move(face_only)));
  }
  return bank;
}

std::optional<std::size_t> MemoryBank::find_cast(std::string_view cast_id) const {
  for (std::size_t j = 0; j < cast_ids_.size(); ++j) {
    if (cast_ids_[j] == cast_id) return j;
  }
  return std::nullopt;
}

std::vector<ScoreBreakdown> MemoryBank::predict(const MultiModalFeature& f) const {
  if (f.dim() != dim_) {
    throw DimensionError("feature dimension " + std::to_string(f.dim()) +
                         " does not match memory dimension " + std::to_string(dim_));
  }
  std::vector<ScoreBreakdown> scores;
  scores.reserve(rows_.size());
  for (const auto& row : rows_) scores.push_back(modality_scores(row, f));
  return scores;
}

void MemoryBank::apply_update(std::size_t j, const MultiModalFeature& f, bool gate,
                              std::int64_t step) {
  if (j >= rows_.size()) throw InvalidInput("unknown cast index " + std::to_string(j));
  if (!gate) return;
  if (f.dim() != dim_) {
    throw DimensionError("feature dimension " + std::to_string(f.dim()) +
                         " does not match memory dimension " + std::to_string(dim_));
  }
  if (!log_.empty() && step <= log_.back().step) {
    throw InvalidInput("memory update steps must strictly increase");
  }

  MemoryUpdateEvent event;
  event.step = step;
  event.cast = j;
  event.similarity = modality_scores(rows_[j], f);

  MultiModalFeature& row = rows_[j];
  const double mu = options_.mu;
  for (Modality m : kModalities) {
    if (!f.has(m)) continue;
    const auto incoming = f.values(m);
    if (!row.has(m)) {
      if (!options_.first_write) continue;
      row.set(m, std::vector<double>(incoming.begin(), incoming.end()));
      event.written[index_of(m)] = true;
      continue;
    }
    event.written[index_of(m)] = true;
    if (mu == 0.0) continue;  // (1 - 0) * slot + 0 * f is the slot itself
    if (mu == 1.0) {
      row.set(m, std::vector<double>(incoming.begin(), incoming.end()));
      continue;
    }
    const auto current = row.values(m);
    std::vector<double> blended(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      blended[i] = (1.0 - mu) * current[i] + mu * incoming[i];
    }
    const double norm = l2_norm(blended);
    if (norm > 0.0) {
      for (double& x : blended) x /= norm;
      row.set(m, std::move(blended));
    } else {
      // mu = 0.5 blend of exactly opposite vectors; keep the old slot.
      event.written[index_of(m)] = false;
    }
  }
  log_.push_back(event);
}

void MemoryBank::apply_update(std::string_view cast_id, const MultiModalFeature& f, bool gate,
                              std::int64_t step) {
  const auto j = find_cast(cast_id);
  if (!j) throw InvalidInput("unknown cast \"" + std::string(cast_id) + "\"");
  apply_update(*j, f, gate, step);
}

}  // namespace oms
