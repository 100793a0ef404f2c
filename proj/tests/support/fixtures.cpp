#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <unistd.h>

#include "oms/feature.hpp"
#include "oms/qnetwork.hpp"
#include "oms/synthetic.hpp"

namespace oms_test {

namespace fs = std::filesystem;

oms::MultiModalFeature feat(Vec face, std::optional<Vec> body, std::optional<Vec> audio) {
  const std::size_t dim = face.size();
  return oms::MultiModalFeature::from_parts(dim, std::move(face), std::move(body),
                                            std::move(audio));
}

oms::MultiModalFeature unit_feat(Vec face, std::optional<Vec> body, std::optional<Vec> audio) {
  return oms::normalize_feature(feat(std::move(face), std::move(body), std::move(audio)));
}

oms::CastPortrait portrait(std::string id, Vec face) {
  return oms::CastPortrait{std::move(id), unit_feat(std::move(face))};
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() / (tag + "_" + std::to_string(::getpid()) + "_" +
                                       std::to_string(stamp) + "_" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

OracleCase make_oracle_case(std::uint64_t seed, std::size_t max_instances, bool learned,
                            const fs::path& scratch) {
  oms::Rng rng(seed);
  oms::SyntheticParams p;
  p.movies = 1;
  p.casts = 1 + rng.index(6);
  p.instances = 1 + rng.index(max_instances);
  p.dim = 2 + rng.index(7);
  for (auto& s : p.sigma) s = 0.6 * rng.uniform();
  p.presence = {0.7 + 0.3 * rng.uniform(), rng.uniform(), rng.uniform()};
  p.drift = 0.05 * rng.uniform();
  p.distractor_fraction = 0.3 * rng.uniform();
  p.seed = rng.next_u64();

  OracleCase c;
  c.stream = oms::generate_synthetic(p).front();
  c.learned = learned;

  const double mus[] = {0.0, 0.01, 0.2, 0.5, 1.0};
  c.engine.memory.mu = mus[rng.index(5)];
  c.engine.memory.first_write = rng.bernoulli(0.8);
  c.engine.cache_enabled = rng.bernoulli(0.8);
  for (std::size_t m = 1; m < 3; ++m) c.engine.modalities.enabled[m] = rng.bernoulli(0.75);

  oms::ControllerConfig cc;
  cc.manual.alpha = 0.5 + 0.45 * rng.uniform();
  cc.manual.beta = cc.manual.alpha * rng.uniform();
  cc.manual.gamma = 0.2 + 0.8 * rng.uniform();
  cc.manual.tau = rng.bernoulli(0.1) ? 0.0 : 0.3 * rng.uniform();

  c.ref.mu = c.engine.memory.mu;
  c.ref.first_write = c.engine.memory.first_write;
  c.ref.cache = c.engine.cache_enabled;
  c.ref.modalities = c.engine.modalities.enabled;
  c.ref.alpha = cc.manual.alpha;
  c.ref.beta = cc.manual.beta;
  c.ref.gamma = cc.manual.gamma;
  c.ref.tau = cc.manual.tau;

  if (learned) {
    cc.kind = oms::ControllerKind::kLearned;
    cc.state_mode = rng.bernoulli(0.5) ? oms::StateMode::kSummary : oms::StateMode::kRaw;
    const std::size_t in = oms::state_size(cc.state_mode, p.dim);
    oms::QCheckpoint g1{oms::QNetwork::random(in, 4 + rng.index(12), rng), cc.state_mode, seed, 0};
    oms::QCheckpoint g2{oms::QNetwork::random(in, 4 + rng.index(12), rng), cc.state_mode, seed, 0};
    // Nudge the "yes" bias so both actions show up.
    g1.net.b2()[1] += 0.5 * (rng.uniform() - 0.5);
    g2.net.b2()[1] += 0.5 * (rng.uniform() - 0.5);
    cc.checkpoint = scratch / ("case_" + std::to_string(seed));
    fs::create_directories(cc.checkpoint);
    oms::save_checkpoint(cc.checkpoint / oms::kUpdateCheckpointName, g1);
    oms::save_checkpoint(cc.checkpoint / oms::kCacheCheckpointName, g2);
    c.ref.learned = true;
    c.ref.raw_state = cc.state_mode == oms::StateMode::kRaw;
  }
  c.policy = oms::make_policy(cc);
  if (learned) {
    const auto& lp = dynamic_cast<const oms::LearnedPolicy&>(*c.policy);
    c.ref.g1 = ref_net(lp.update_net());
    c.ref.g2 = ref_net(lp.cache_net());
  }
  return c;
}

}  // namespace oms_test
