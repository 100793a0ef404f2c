#include "oms/controller.hpp"

#include <algorithm>

#include "json.hpp"
#include "oms/error.hpp"

namespace oms {

using nlohmann::json;

void ManualControllerConfig::validate() const {
  if (!(beta <= alpha)) throw InvalidInput("manual controller requires beta <= alpha");
  if (!(tau >= 0.0)) throw InvalidInput("manual controller requires tau >= 0");
}

bool manual_gate1(double score, double alpha) { return score - alpha >= 0.0; }

bool manual_gate2(std::span<const double> scores, double beta) {
  return std::all_of(scores.begin(), scores.end(), [beta](double p) { return beta - p >= 0.0; });
}

bool manual_gate3(std::span<const double> scores, std::int64_t age, double gamma, double tau) {
  const double aging = tau * static_cast<double>(age);
  for (double p : scores) {
    // Negative scores are clamped so a long stay cannot flip their sign.
    if (gamma - aging * std::max(p, 0.0) < 0.0) return true;
  }
  return false;
}

std::vector<double> combined_scores(std::span<const ScoreBreakdown> scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s.combined);
  return out;
}

std::size_t best_cast(std::span<const ScoreBreakdown> scores) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j].combined > scores[best].combined) best = j;
  }
  return best;
}

StateVector encode_state(const MemoryBank& bank, std::size_t j, const MultiModalFeature& f,
                         std::span<const ScoreBreakdown> scores, StateMode mode) {
  StateVector state{mode, {}};
  const MultiModalFeature& row = bank.row(j);
  if (mode == StateMode::kRaw) {
    state.values.reserve(6 * bank.dim());
    for (Modality m : kModalities) {
      const auto v = row.values(m);
      state.values.insert(state.values.end(), v.begin(), v.end());
    }
    for (Modality m : kModalities) {
      const auto v = f.values(m);
      state.values.insert(state.values.end(), v.begin(), v.end());
    }
    return state;
  }
  const ScoreBreakdown own = modality_scores(row, f);
  state.values.reserve(10);
  for (double c : own.per_modality) state.values.push_back(c);
  for (Modality m : kModalities) state.values.push_back(f.has(m) ? 1.0 : 0.0);
  for (Modality m : kModalities) state.values.push_back(row.has(m) ? 1.0 : 0.0);
  double other = 0.0;
  bool any_other = false;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (k == j) continue;
    other = any_other ? std::max(other, scores[k].combined) : scores[k].combined;
    any_other = true;
  }
  state.values.push_back(other);
  return state;
}

StateVector encode_state(const MemoryBank& bank, std::size_t j, const MultiModalFeature& f,
                         StateMode mode) {
  if (mode == StateMode::kRaw) return encode_state(bank, j, f, {}, mode);
  const auto scores = bank.predict(f);
  return encode_state(bank, j, f, scores, mode);
}

bool learned_gate(const StateVector& state, const QNetwork& net) {
  const auto q = net.forward(state.values);
  return q[1] > q[0];
}

std::string_view controller_kind_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kManual:
      return "manual";
    case ControllerKind::kLearned:
      return "learned";
    case ControllerKind::kDisabled:
      return "disabled";
  }
  return "unknown";
}

bool GatePolicy::release_gate(std::span<const ScoreBreakdown> scores, std::int64_t age) const {
  const auto combined = combined_scores(scores);
  return manual_gate3(combined, age, release_.gamma, release_.tau);
}

ManualPolicy::ManualPolicy(ManualControllerConfig config) : GatePolicy(config), config_(config) {
  config_.validate();
}

bool ManualPolicy::update_gate(const GateContext& ctx, std::size_t j) const {
  return manual_gate1(ctx.scores[j].combined, config_.alpha);
}

bool ManualPolicy::cache_gate(const GateContext& ctx) const {
  return manual_gate2(combined_scores(ctx.scores), config_.beta);
}

LearnedPolicy::LearnedPolicy(QNetwork update_net, QNetwork cache_net, StateMode mode,
                             ManualControllerConfig release)
    : GatePolicy(release),
      update_net_(std::move(update_net)),
      cache_net_(std::move(cache_net)),
      mode_(mode) {
  if (!(release.tau >= 0.0)) throw InvalidInput("release gate requires tau >= 0");
}

bool LearnedPolicy::update_gate(const GateContext& ctx, std::size_t j) const {
  return learned_gate(encode_state(ctx.bank, j, ctx.feature, ctx.scores, mode_), update_net_);
}

bool LearnedPolicy::cache_gate(const GateContext& ctx) const {
  const std::size_t j = best_cast(ctx.scores);
  return learned_gate(encode_state(ctx.bank, j, ctx.feature, ctx.scores, mode_), cache_net_);
}

ControllerConfig parse_controller_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("controller config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("controller config must be a JSON object");
  ControllerConfig cfg;
  try {
    const auto kind = j.value("kind", std::string("manual"));
    if (kind == "manual") {
      cfg.kind = ControllerKind::kManual;
    } else if (kind == "learned") {
      cfg.kind = ControllerKind::kLearned;
    } else {
      throw ParseError("controller kind must be \"manual\" or \"learned\", got \"" + kind + "\"");
    }
    cfg.manual.alpha = j.value("alpha", cfg.manual.alpha);
    cfg.manual.beta = j.value("beta", cfg.manual.beta);
    cfg.manual.gamma = j.value("gamma", cfg.manual.gamma);
    cfg.manual.tau = j.value("tau", cfg.manual.tau);
    const auto mode = parse_state_mode(j.value("state_mode", std::string("summary")));
    if (!mode) throw ParseError("state_mode must be \"summary\" or \"raw\"");
    cfg.state_mode = *mode;
    if (j.contains("checkpoint") && !j["checkpoint"].is_null()) {
      cfg.checkpoint = j["checkpoint"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed controller config: ") + e.what());
  }
  if (cfg.kind == ControllerKind::kLearned && cfg.checkpoint.empty()) {
    throw InvalidInput("learned controller needs a checkpoint directory");
  }
  return cfg;
}

std::string controller_config_to_json(const ControllerConfig& config) {
  json j;
  j["kind"] = config.kind == ControllerKind::kLearned ? "learned" : "manual";
  j["alpha"] = config.manual.alpha;
  j["beta"] = config.manual.beta;
  j["gamma"] = config.manual.gamma;
  j["tau"] = config.manual.tau;
  j["state_mode"] = std::string(state_mode_name(config.state_mode));
  if (!config.checkpoint.empty()) j["checkpoint"] = config.checkpoint.string();
  return j.dump(2);
}

std::unique_ptr<GatePolicy> make_policy(const ControllerConfig& config) {
  switch (config.kind) {
    case ControllerKind::kManual:
      return std::make_unique<ManualPolicy>(config.manual);
    case ControllerKind::kLearned: {
      auto g1 = load_checkpoint(config.checkpoint / kUpdateCheckpointName);
      auto g2 = load_checkpoint(config.checkpoint / kCacheCheckpointName);
      if (g1.state_mode != config.state_mode || g2.state_mode != config.state_mode) {
        throw InvalidInput("checkpoint state_mode does not match controller config");
      }
      return std::make_unique<LearnedPolicy>(std::move(g1.net), std::move(g2.net),
                                             config.state_mode, config.manual);
    }
    case ControllerKind::kDisabled:
      return std::make_unique<DisabledPolicy>();
  }
  throw InvalidInput("unknown controller kind");
}

}  // namespace oms
