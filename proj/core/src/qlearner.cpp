#include "oms/qlearner.hpp"

#include <algorithm>
#include <cmath>

#include "oms/error.hpp"

namespace oms {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  if (epochs <= 0) throw InvalidInput("epochs must be positive");
  if (iterations_per_movie <= 0) throw InvalidInput("iterations per movie must be positive");
  if (horizon < 0) throw InvalidInput("horizon must be non-negative");
  if (batch_size == 0) throw InvalidInput("batch size must be positive");
  if (hidden == 0) throw InvalidInput("hidden width must be positive");
  for (double e : {epsilon_start, epsilon_end}) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
  }
  if (!(epsilon_decay > 0.0)) throw InvalidInput("epsilon decay fraction must be positive");
}

double reward(bool action, bool is_match, GateKind /*kind*/) {
  return action == is_match ? 1.0 : 0.0;
}

double n_step_return(std::span<const double> rewards, std::size_t t, int horizon) {
  if (t >= rewards.size()) {
    throw InvalidInput("return requested at step " + std::to_string(t) + " of " +
                       std::to_string(rewards.size()));
  }
  const std::size_t end = std::min(rewards.size(), t + static_cast<std::size_t>(horizon) + 1);
  double sum = 0.0;
  for (std::size_t m = t; m < end; ++m) sum += rewards[m];
  return sum;
}

std::vector<double> n_step_returns(std::span<const double> rewards, int horizon) {
  std::vector<double> out(rewards.size());
  for (std::size_t t = 0; t < rewards.size(); ++t) out[t] = n_step_return(rewards, t, horizon);
  return out;
}

namespace {

struct Activations {
  std::vector<double> pre;  // hidden pre-activations
  std::array<double, QNetwork::kActions> q{};
};

Activations forward_cached(const QNetwork& net, std::span<const double> s) {
  if (s.size() != net.input_dim()) {
    throw DimensionError("state has length " + std::to_string(s.size()) +
                         ", network expects " + std::to_string(net.input_dim()));
  }
  const std::size_t in = net.input_dim();
  const std::size_t hid = net.hidden_dim();
  const auto w1 = net.w1();
  const auto b1 = net.b1();
  const auto w2 = net.w2();
  Activations a;
  a.pre.resize(hid);
  a.q = {net.b2()[0], net.b2()[1]};
  for (std::size_t h = 0; h < hid; ++h) {
    double z = b1[h];
    for (std::size_t i = 0; i < in; ++i) z += w1[h * in + i] * s[i];
    a.pre[h] = z;
    if (z <= 0.0) continue;
    a.q[0] += w2[h] * z;
    a.q[1] += w2[hid + h] * z;
  }
  return a;
}

}  // namespace

double loss_and_gradient(const QNetwork& net, std::span<const Transition> batch,
                         std::span<double> grad) {
  if (batch.empty()) throw TrainingError("empty training batch");
  if (grad.size() != net.parameters().size()) {
    throw DimensionError("gradient buffer does not match the parameter count");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t in = net.input_dim();
  const std::size_t hid = net.hidden_dim();
  const auto w2 = net.w2();
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& tr : batch) {
    if (tr.action != 0 && tr.action != 1) throw TrainingError("action must be 0 or 1");
    const auto& s = tr.state.values;
    const Activations a = forward_cached(net, s);
    const std::size_t act = static_cast<std::size_t>(tr.action);
    const double err = a.q[act] - tr.ret;
    loss += err * err * scale;
    const double g = 2.0 * err * scale;
    grad[net.b2_offset() + act] += g;
    for (std::size_t h = 0; h < hid; ++h) {
      if (a.pre[h] <= 0.0) continue;
      grad[net.w2_offset() + act * hid + h] += g * a.pre[h];
      const double dh = g * w2[act * hid + h];
      grad[net.b1_offset() + h] += dh;
      double* row = grad.data() + h * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += dh * s[i];
    }
  }
  return loss;
}

double batch_loss(const QNetwork& net, std::span<const Transition> batch) {
  if (batch.empty()) throw TrainingError("empty training batch");
  double loss = 0.0;
  for (const auto& tr : batch) {
    const auto q = net.forward(tr.state.values);
    const double err = q[static_cast<std::size_t>(tr.action)] - tr.ret;
    loss += err * err;
  }
  return loss / static_cast<double>(batch.size());
}

double q_train_step(QNetwork& net, std::span<const Transition> batch, double learning_rate) {
  std::vector<double> grad(net.parameters().size());
  const double loss = loss_and_gradient(net, batch, grad);
  if (!std::isfinite(loss)) {
    throw TrainingError("non-finite loss (" + std::to_string(loss) +
                        ") on a batch of " + std::to_string(batch.size()) +
                        "; lower the learning rate");
  }
  auto params = net.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= learning_rate * grad[k];
  return loss;
}

ExploringPolicy::ExploringPolicy(const QNetwork& update_net, const QNetwork& cache_net,
                                 StateMode mode, ManualControllerConfig release, double epsilon,
                                 Rng* rng, Recorder* recorder)
    : GatePolicy(release),
      update_net_(update_net),
      cache_net_(cache_net),
      mode_(mode),
      epsilon_(epsilon),
      rng_(rng),
      recorder_(recorder) {}

bool ExploringPolicy::choose(const StateVector& state, const QNetwork& net) const {
  if (rng_->uniform() < epsilon_) return rng_->bernoulli(0.5);
  return learned_gate(state, net);
}

bool ExploringPolicy::update_gate(const GateContext& ctx, std::size_t j) const {
  auto state = encode_state(ctx.bank, j, ctx.feature, ctx.scores, mode_);
  const bool action = choose(state, update_net_);
  recorder_->update.push_back(Decision{ctx.step, j, std::move(state), action});
  return action;
}

bool ExploringPolicy::cache_gate(const GateContext& ctx) const {
  const std::size_t top = best_cast(ctx.scores);
  auto state = encode_state(ctx.bank, top, ctx.feature, ctx.scores, mode_);
  const bool action = choose(state, cache_net_);
  recorder_->cache.push_back(Decision{ctx.step, top, std::move(state), action});
  return action;
}

namespace {

std::vector<Transition> to_transitions(const std::vector<ExploringPolicy::Decision>& decisions,
                                       const std::vector<double>& rewards, int horizon,
                                       const std::string& movie_id) {
  const auto returns = n_step_returns(rewards, horizon);
  std::vector<Transition> out;
  out.reserve(decisions.size());
  for (std::size_t k = 0; k < decisions.size(); ++k) {
    out.push_back(Transition{decisions[k].state, decisions[k].action ? 1 : 0, returns[k],
                             movie_id, decisions[k].step});
  }
  return out;
}

}  // namespace

Rollout collect_rollout(const MovieStream& stream, const QNetwork& update_net,
                        const QNetwork& cache_net, double epsilon, Rng& rng,
                        const TrainConfig& config) {
  if (!stream.fully_labeled()) {
    throw TrainingError("movie \"" + stream.movie_id + "\" has instances without ground truth");
  }
  ExploringPolicy::Recorder recorder;
  ExploringPolicy policy(update_net, cache_net, config.state_mode, config.release, epsilon, &rng,
                         &recorder);
  Rollout rollout;
  rollout.result = run_movie(stream, policy, config.engine, "training");

  const auto& instances = stream.instances;
  const std::size_t casts = stream.casts.size();

  // Update gate: one decision sequence per cast, one decision per step.
  std::vector<std::vector<ExploringPolicy::Decision>> per_cast(casts);
  for (auto& d : recorder.update) per_cast[d.cast].push_back(std::move(d));
  for (std::size_t j = 0; j < casts; ++j) {
    std::vector<double> rewards;
    rewards.reserve(per_cast[j].size());
    for (const auto& d : per_cast[j]) {
      const GroundTruth& truth = instances[static_cast<std::size_t>(d.step)].truth;
      rewards.push_back(truth.is_cast() ? reward(d.action, truth.is_cast(j), GateKind::kUpdate)
                                        : 0.0);
    }
    auto transitions = to_transitions(per_cast[j], rewards, config.horizon, stream.movie_id);
    rollout.update.insert(rollout.update.end(), std::make_move_iterator(transitions.begin()),
                          std::make_move_iterator(transitions.end()));
  }

  // Cache gate: its own decision sequence; caching is right when the
  // current top-1 guess is wrong.
  std::vector<double> rewards;
  rewards.reserve(recorder.cache.size());
  for (const auto& d : recorder.cache) {
    const GroundTruth& truth = instances[static_cast<std::size_t>(d.step)].truth;
    rewards.push_back(truth.is_cast() ? reward(d.action, !truth.is_cast(d.cast), GateKind::kCache)
                                      : 0.0);
  }
  rollout.cache = to_transitions(recorder.cache, rewards, config.horizon, stream.movie_id);
  return rollout;
}

namespace {

double epsilon_at(const TrainConfig& config, std::size_t rollout, std::size_t total) {
  if (total <= 1) return config.epsilon_start;
  const double span = config.epsilon_decay * static_cast<double>(total - 1);
  const double progress = std::min(1.0, static_cast<double>(rollout) / span);
  return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * progress;
}

double mean_return(const std::vector<Transition>& transitions) {
  if (transitions.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : transitions) sum += t.ret;
  return sum / static_cast<double>(transitions.size());
}

/// `iterations` SGD steps on minibatches drawn with replacement.
double train_on(QNetwork& net, const std::vector<Transition>& pool, int iterations,
                std::size_t batch_size, double lr, Rng& rng, std::size_t& steps) {
  if (pool.empty()) return 0.0;
  double loss_sum = 0.0;
  std::vector<Transition> batch(batch_size);
  for (int it = 0; it < iterations; ++it) {
    for (auto& slot : batch) slot = pool[rng.index(pool.size())];
    loss_sum += q_train_step(net, batch, lr);
    ++steps;
  }
  return loss_sum / static_cast<double>(iterations);
}

}  // namespace

TrainResult train_agents(std::span<const MovieStream> movies, const TrainConfig& config) {
  config.validate();
  if (movies.empty()) throw TrainingError("no training movies");
  const std::size_t dim = movies.front().dim;
  for (const auto& m : movies) {
    if (m.dim != dim) throw DimensionError("training movies disagree on feature dimension");
    if (!m.fully_labeled()) {
      throw TrainingError("movie \"" + m.movie_id + "\" has instances without ground truth");
    }
  }

  const Rng root(config.seed);
  const std::size_t input = state_size(config.state_mode, dim);
  Rng init_rng = root.split("init");
  TrainResult out;
  out.update.net = QNetwork::random(input, config.hidden, init_rng);
  out.cache.net = QNetwork::random(input, config.hidden, init_rng);

  const std::size_t total = static_cast<std::size_t>(config.epochs) * movies.size();
  std::size_t rollout_index = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    double ret_update = 0.0, ret_cache = 0.0, loss_update = 0.0, loss_cache = 0.0;
    for (std::size_t mi = 0; mi < movies.size(); ++mi, ++rollout_index) {
      const double epsilon = epsilon_at(config, rollout_index, total);
      if (mi == 0) log.epsilon = epsilon;
      Rng explore = root.split("explore", rollout_index);
      Rng sample = root.split("batch", rollout_index);
      const Rollout rollout =
          collect_rollout(movies[mi], out.update.net, out.cache.net, epsilon, explore, config);
      ret_update += mean_return(rollout.update);
      ret_cache += mean_return(rollout.cache);
      loss_update += train_on(out.update.net, rollout.update, config.iterations_per_movie,
                              config.batch_size, config.learning_rate, sample, log.steps_update);
      loss_cache += train_on(out.cache.net, rollout.cache, config.iterations_per_movie,
                             config.batch_size, config.learning_rate, sample, log.steps_cache);
    }
    const double m = static_cast<double>(movies.size());
    log.mean_return_update = ret_update / m;
    log.mean_return_cache = ret_cache / m;
    log.mean_loss_update = loss_update / m;
    log.mean_loss_cache = loss_cache / m;
    out.log.push_back(log);
  }
  for (QCheckpoint* cp : {&out.update, &out.cache}) {
    cp->state_mode = config.state_mode;
    cp->seed = config.seed;
    cp->epoch = config.epochs;
  }
  return out;
}

}  // namespace oms
