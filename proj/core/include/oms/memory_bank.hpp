#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oms/feature.hpp"

namespace oms {

struct CastPortrait {
  std::string cast_id;
  MultiModalFeature feature;
};

/// One applied memory write, with the similarity between the instance and
/// the cast's memory just before the write.
struct MemoryUpdateEvent {
  std::int64_t step = 0;
  std::size_t cast = 0;
  ScoreBreakdown similarity;
  std::array<bool, kModalityCount> written{};
};

struct MemoryBankOptions {
  /// Blend weight of the incoming instance.
  double mu = 0.01;
  /// Write an instance straight into a void slot instead of blending with
  /// zeros. Disabling it together with mu = 0 freezes the memory.
  bool first_write = true;
};

/// Per-cast face/body/audio memory.
///
/// Each cast row is a MultiModalFeature whose presence flags mean "slot
/// filled". Face rows come from the portraits; body and audio start void.
class MemoryBank {
 public:
  /// Throws InvalidInput if a portrait lacks a face or a cast id repeats.
  static MemoryBank init(std::span<const CastPortrait> portraits, MemoryBankOptions options = {});

  [[nodiscard]] std::size_t cast_count() const { return rows_.size(); }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const std::string& cast_id(std::size_t j) const { return cast_ids_.at(j); }
  [[nodiscard]] const std::vector<std::string>& cast_ids() const { return cast_ids_; }
  [[nodiscard]] std::optional<std::size_t> find_cast(std::string_view cast_id) const;
  [[nodiscard]] const MultiModalFeature& row(std::size_t j) const { return rows_.at(j); }
  [[nodiscard]] bool filled(std::size_t j, Modality m) const { return rows_.at(j).has(m); }
  [[nodiscard]] const MemoryBankOptions& options() const { return options_; }
  [[nodiscard]] const std::vector<MemoryUpdateEvent>& update_log() const { return log_; }

  /// Scores `f` against every cast row (presence-intersection cosines).
  [[nodiscard]] std::vector<ScoreBreakdown> predict(const MultiModalFeature& f) const;

  /// Gated blend of `f` into cast j. gate = false leaves the bank untouched;
  /// gate = true writes every modality present in f and logs one event.
  /// Steps of successive writes must strictly increase.
  void apply_update(std::size_t j, const MultiModalFeature& f, bool gate, std::int64_t step);
  void apply_update(std::string_view cast_id, const MultiModalFeature& f, bool gate,
                    std::int64_t step);

 private:
  std::size_t dim_ = 0;
  MemoryBankOptions options_;
  std::vector<std::string> cast_ids_;
  std::vector<MultiModalFeature> rows_;
  std::vector<MemoryUpdateEvent> log_;
};

}  // namespace oms
