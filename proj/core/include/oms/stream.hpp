#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oms/feature.hpp"
#include "oms/memory_bank.hpp"

namespace oms {

/// Identity label of an instance.
struct GroundTruth {
  enum class Kind {
    kUnlabeled,  // no annotation available
    kOther,      // a distractor: none of the listed casts
    kCast,       // the cast at index `cast`
  };
  Kind kind = Kind::kUnlabeled;
  std::size_t cast = 0;

  static GroundTruth unlabeled() { return {}; }
  static GroundTruth other() { return {Kind::kOther, 0}; }
  static GroundTruth of(std::size_t j) { return {Kind::kCast, j}; }
  [[nodiscard]] bool is_cast() const { return kind == Kind::kCast; }
  [[nodiscard]] bool is_cast(std::size_t j) const { return kind == Kind::kCast && cast == j; }
  [[nodiscard]] bool labeled() const { return kind != Kind::kUnlabeled; }

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Instance {
  std::string id;
  std::int64_t t = 0;
  MultiModalFeature feature;
  GroundTruth truth;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// One movie: the cast list with portraits and the instances in arrival
/// order.
struct MovieStream {
  std::string movie_id;
  std::size_t dim = 0;
  std::vector<CastPortrait> casts;
  std::vector<Instance> instances;

  [[nodiscard]] std::vector<std::string> cast_ids() const;
  /// Every instance carries a cast or "other" label.
  [[nodiscard]] bool fully_labeled() const;
};

}  // namespace oms
