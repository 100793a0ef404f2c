#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace oms {

enum class Modality : std::size_t { kFace = 0, kBody = 1, kAudio = 2 };

inline constexpr std::size_t kModalityCount = 3;
inline constexpr std::array<Modality, kModalityCount> kModalities = {
    Modality::kFace, Modality::kBody, Modality::kAudio};

constexpr std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }
std::string_view modality_name(Modality m);

/// Face, body and audio vectors of one instance (or one memory row).
///
/// Every slot holds exactly dim() values. An absent modality is stored as a
/// zero vector with its presence flag cleared, so it adds nothing to any
/// inner product.
class MultiModalFeature {
 public:
  MultiModalFeature() = default;
  explicit MultiModalFeature(std::size_t dim);

  /// Builds a feature from optional parts; every present part must have
  /// length dim.
  static MultiModalFeature from_parts(std::size_t dim,
                                      std::optional<std::vector<double>> face,
                                      std::optional<std::vector<double>> body,
                                      std::optional<std::vector<double>> audio);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] bool has(Modality m) const { return present_[index_of(m)]; }
  [[nodiscard]] std::span<const double> values(Modality m) const {
    return vectors_[index_of(m)];
  }
  [[nodiscard]] std::size_t present_count() const;

  void set(Modality m, std::vector<double> values);
  void clear(Modality m);

  friend bool operator==(const MultiModalFeature&, const MultiModalFeature&) = default;

 private:
  std::size_t dim_ = 0;
  std::array<std::vector<double>, kModalityCount> vectors_;
  std::array<bool, kModalityCount> present_{};
};

/// Which modalities a run is allowed to look at.
struct ModalityMask {
  std::array<bool, kModalityCount> enabled{true, true, true};

  static ModalityMask all() { return {}; }
  static ModalityMask face_only() { return {{true, false, false}}; }
  [[nodiscard]] bool allows(Modality m) const { return enabled[index_of(m)]; }
  friend bool operator==(const ModalityMask&, const ModalityMask&) = default;
};

/// Copy of `feature` with disallowed modalities cleared.
MultiModalFeature apply_mask(const MultiModalFeature& feature, const ModalityMask& mask);

/// Per-modality cosines and their mean over the modalities both sides have.
struct ScoreBreakdown {
  std::array<double, kModalityCount> per_modality{};  // 0 where not shared
  std::array<bool, kModalityCount> shared{};
  double combined = 0.0;
  int shared_modalities = 0;

  friend bool operator==(const ScoreBreakdown&, const ScoreBreakdown&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Rescales each present modality to unit L2 norm. Throws InvalidInput for a
/// present vector that is all zero or contains a non-finite value.
MultiModalFeature normalize_feature(MultiModalFeature raw);

/// Inner product of the concatenated 3d vectors (absent slots are zeros).
double concat_score(const MultiModalFeature& a, const MultiModalFeature& b);

/// Cosine per shared modality and their mean. Inputs must be normalized.
ScoreBreakdown modality_scores(const MultiModalFeature& a, const MultiModalFeature& b);

}  // namespace oms
