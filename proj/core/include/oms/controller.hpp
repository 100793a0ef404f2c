#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oms/feature.hpp"
#include "oms/memory_bank.hpp"
#include "oms/qnetwork.hpp"
#include "oms/state.hpp"

namespace oms {

/// Thresholds of the rule-based gates. A comparison that lands exactly on
/// a threshold counts as passing it (sgn(0) = 1).
struct ManualControllerConfig {
  double alpha = 0.89;  // update memory when score >= alpha
  double beta = 0.75;   // cache when every score <= beta
  double gamma = 0.6;   // release when tau * age * score >= gamma
  double tau = 0.08;    // aging weight

  /// Throws InvalidInput unless beta <= alpha and tau >= 0.
  void validate() const;
};

bool manual_gate1(double score, double alpha);
bool manual_gate2(std::span<const double> scores, double beta);
bool manual_gate3(std::span<const double> scores, std::int64_t age, double gamma, double tau);

std::vector<double> combined_scores(std::span<const ScoreBreakdown> scores);

/// Index of the highest combined score; ties go to the lowest index.
std::size_t best_cast(std::span<const ScoreBreakdown> scores);

/// Encodes the (memory row of cast j, instance) pair. `scores` are the
/// instance's current per-cast scores (needed for the other-cast maximum).
StateVector encode_state(const MemoryBank& bank, std::size_t j, const MultiModalFeature& f,
                         std::span<const ScoreBreakdown> scores, StateMode mode);
StateVector encode_state(const MemoryBank& bank, std::size_t j, const MultiModalFeature& f,
                         StateMode mode);

/// argmax over the two action values; a tie picks action 0.
bool learned_gate(const StateVector& state, const QNetwork& net);

enum class ControllerKind { kManual, kLearned, kDisabled };
std::string_view controller_kind_name(ControllerKind kind);

/// What a gate sees when it is asked about the current instance.
struct GateContext {
  const MemoryBank& bank;
  const MultiModalFeature& feature;
  std::span<const ScoreBreakdown> scores;
  std::int64_t step;
};

/// Decides the three gates for the engine. Implementations used for
/// inference hold no mutable state and may be shared across runs.
class GatePolicy {
 public:
  virtual ~GatePolicy() = default;
  [[nodiscard]] virtual ControllerKind kind() const = 0;
  /// G1: write this instance into cast j's memory?
  virtual bool update_gate(const GateContext& ctx, std::size_t j) const = 0;
  /// G2: hold this instance in the cache?
  virtual bool cache_gate(const GateContext& ctx) const = 0;
  /// G3: let a cached instance go? `age` is in engine steps.
  virtual bool release_gate(std::span<const ScoreBreakdown> scores, std::int64_t age) const;

  [[nodiscard]] const ManualControllerConfig& release_params() const { return release_; }

 protected:
  explicit GatePolicy(ManualControllerConfig release) : release_(release) {}

 private:
  ManualControllerConfig release_;
};

class ManualPolicy final : public GatePolicy {
 public:
  explicit ManualPolicy(ManualControllerConfig config);
  [[nodiscard]] ControllerKind kind() const override { return ControllerKind::kManual; }
  bool update_gate(const GateContext& ctx, std::size_t j) const override;
  bool cache_gate(const GateContext& ctx) const override;
  [[nodiscard]] const ManualControllerConfig& config() const { return config_; }

 private:
  ManualControllerConfig config_;
};

/// Q-network gates for G1 and G2; G3 stays rule-based.
class LearnedPolicy final : public GatePolicy {
 public:
  LearnedPolicy(QNetwork update_net, QNetwork cache_net, StateMode mode,
                ManualControllerConfig release);
  [[nodiscard]] ControllerKind kind() const override { return ControllerKind::kLearned; }
  bool update_gate(const GateContext& ctx, std::size_t j) const override;
  bool cache_gate(const GateContext& ctx) const override;
  [[nodiscard]] const QNetwork& update_net() const { return update_net_; }
  [[nodiscard]] const QNetwork& cache_net() const { return cache_net_; }
  [[nodiscard]] StateMode mode() const { return mode_; }

 private:
  QNetwork update_net_;
  QNetwork cache_net_;
  StateMode mode_;
};

/// Never updates memory and never caches.
class DisabledPolicy final : public GatePolicy {
 public:
  DisabledPolicy() : GatePolicy(ManualControllerConfig{}) {}
  [[nodiscard]] ControllerKind kind() const override { return ControllerKind::kDisabled; }
  bool update_gate(const GateContext&, std::size_t) const override { return false; }
  bool cache_gate(const GateContext&) const override { return false; }
};

/// Parsed form of the controller JSON block:
/// {"kind": "manual"|"learned", "alpha", "beta", "gamma", "tau",
///  "state_mode": "summary"|"raw", "checkpoint": dir}
/// A learned checkpoint directory holds g1.json and g2.json.
struct ControllerConfig {
  ControllerKind kind = ControllerKind::kManual;
  ManualControllerConfig manual;
  StateMode state_mode = StateMode::kSummary;
  std::filesystem::path checkpoint;
};

ControllerConfig parse_controller_config(std::string_view json_text);
std::string controller_config_to_json(const ControllerConfig& config);

inline constexpr std::string_view kUpdateCheckpointName = "g1.json";
inline constexpr std::string_view kCacheCheckpointName = "g2.json";

/// Builds the policy a config describes, loading checkpoints if learned.
std::unique_ptr<GatePolicy> make_policy(const ControllerConfig& config);

}  // namespace oms
