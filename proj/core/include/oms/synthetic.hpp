#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "oms/feature.hpp"
#include "oms/stream.hpp"

namespace oms {

/// Knobs of the synthetic benchmark. Defaults give the desk-scale
/// benchmark: portraits go stale as casts drift and many faces are noisy,
/// so static face matching lands well short of perfect.
struct SyntheticParams {
  std::size_t movies = 10;
  std::size_t casts = 6;
  std::size_t instances = 400;
  std::size_t dim = 16;
  /// Per-modality (face, body, audio) per-component noise standard
  /// deviation, scaled per instance by an Exp(1) appearance-quality draw.
  std::array<double, kModalityCount> sigma{0.35, 0.35, 0.35};
  /// Per-modality probability that an instance carries the modality.
  std::array<double, kModalityCount> presence{1.0, 0.9, 0.4};
  /// Per-component standard deviation of the random-walk step applied to
  /// a cast's prototypes each time it appears.
  double drift = 0.01;
  /// Fraction of instances that belong to none of the casts.
  double distractor_fraction = 0.1;
  std::uint64_t seed = 0;

  /// Throws InvalidInput on out-of-range values (dim < 2, probabilities
  /// outside [0, 1], negative sigma or drift, zero casts).
  void validate() const;
};

/// Deterministic in `params` (including the seed).
std::vector<MovieStream> generate_synthetic(const SyntheticParams& params);

}  // namespace oms
