#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oms/controller.hpp"
#include "oms/engine.hpp"
#include "oms/qnetwork.hpp"
#include "oms/rng.hpp"
#include "oms/state.hpp"
#include "oms/stream.hpp"

namespace oms {

/// Which learned gate a transition belongs to.
enum class GateKind { kUpdate, kCache };

/// One (state, action) the agent took, with the cumulative 0/1 reward
/// observed over the following horizon (inclusive of the step itself).
struct Transition {
  StateVector state;
  int action = 0;
  double ret = 0.0;
  std::string movie_id;
  std::int64_t step = 0;
};

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 100;
  int iterations_per_movie = 200;
  /// Return horizon T: R_t sums rewards t..t+T.
  int horizon = 30;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Fraction of all rollouts over which epsilon decays linearly.
  double epsilon_decay = 1.0;
  std::size_t batch_size = 32;
  std::size_t hidden = QNetwork::kDefaultHidden;
  std::uint64_t seed = 0;
  StateMode state_mode = StateMode::kSummary;
  /// Release gate used while rolling out (G3 is never learned).
  ManualControllerConfig release;
  EngineConfig engine;

  void validate() const;
};

/// 1 when the action agrees with the label, else 0. For the update gate
/// `is_match` means "the instance is this cast"; for the cache gate it
/// means "the current top-1 guess is wrong".
double reward(bool action, bool is_match, GateKind kind);

/// Inclusive sum of rewards[t .. t+horizon], truncated at the end.
/// Throws InvalidInput if t is out of range.
double n_step_return(std::span<const double> rewards, std::size_t t, int horizon);
std::vector<double> n_step_returns(std::span<const double> rewards, int horizon);

/// Mean squared error between Q(s, a_taken) and the return; writes the
/// gradient with respect to net.parameters() into `grad`.
double loss_and_gradient(const QNetwork& net, std::span<const Transition> batch,
                         std::span<double> grad);
double batch_loss(const QNetwork& net, std::span<const Transition> batch);

/// One plain SGD step. Returns the loss before the step.
double q_train_step(QNetwork& net, std::span<const Transition> batch, double learning_rate);

/// Epsilon-greedy wrapper over the two Q-networks that records every G1/G2
/// decision it makes. Only for training rollouts.
class ExploringPolicy final : public GatePolicy {
 public:
  struct Decision {
    std::int64_t step = 0;
    std::size_t cast = 0;  // G1: the cast asked about; G2: the top-1 cast
    StateVector state;
    bool action = false;
  };
  struct Recorder {
    std::vector<Decision> update;
    std::vector<Decision> cache;
  };

  ExploringPolicy(const QNetwork& update_net, const QNetwork& cache_net, StateMode mode,
                  ManualControllerConfig release, double epsilon, Rng* rng, Recorder* recorder);
  [[nodiscard]] ControllerKind kind() const override { return ControllerKind::kLearned; }
  bool update_gate(const GateContext& ctx, std::size_t j) const override;
  bool cache_gate(const GateContext& ctx) const override;

 private:
  bool choose(const StateVector& state, const QNetwork& net) const;

  const QNetwork& update_net_;
  const QNetwork& cache_net_;
  StateMode mode_;
  double epsilon_;
  Rng* rng_;
  Recorder* recorder_;
};

struct Rollout {
  MovieResult result;
  std::vector<Transition> update;
  std::vector<Transition> cache;
};

/// Runs the engine once with exploring gates and turns the recorded
/// decisions into transitions. Distractor steps earn no reward.
Rollout collect_rollout(const MovieStream& stream, const QNetwork& update_net,
                        const QNetwork& cache_net, double epsilon, Rng& rng,
                        const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  double epsilon = 0.0;
  double mean_return_update = 0.0;
  double mean_return_cache = 0.0;
  double mean_loss_update = 0.0;
  double mean_loss_cache = 0.0;
  std::size_t steps_update = 0;
  std::size_t steps_cache = 0;
};

struct TrainResult {
  QCheckpoint update;
  QCheckpoint cache;
  std::vector<EpochLog> log;
};

/// Trains both agents. Throws TrainingError if a movie lacks labels.
/// Deterministic for a given config.seed.
TrainResult train_agents(std::span<const MovieStream> movies, const TrainConfig& config);

}  // namespace oms
