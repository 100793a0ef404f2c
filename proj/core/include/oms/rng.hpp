#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace oms {

/// Seeded, splittable random source.
///
/// All randomness in the library flows through this type. Children are
/// derived by hashing the parent seed with a tag and an index, so the
/// stream a component sees does not depend on how many draws other
/// components made. Uniform and normal variates are computed from raw
/// mt19937_64 output (whose sequence is fixed by the standard) rather than
/// the <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  [[nodiscard]] Rng split(std::string_view tag, std::uint64_t index = 0) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace oms
