#include "oms/qnetwork.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "oms/error.hpp"

namespace oms {

using nlohmann::json;

std::string_view state_mode_name(StateMode mode) {
  return mode == StateMode::kRaw ? "raw" : "summary";
}

std::optional<StateMode> parse_state_mode(std::string_view text) {
  if (text == "summary") return StateMode::kSummary;
  if (text == "raw") return StateMode::kRaw;
  return std::nullopt;
}

std::size_t state_size(StateMode mode, std::size_t dim) {
  return mode == StateMode::kRaw ? 6 * dim : 10;
}

QNetwork::QNetwork(std::size_t input_dim, std::size_t hidden_dim)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      params_(hidden_dim * input_dim + hidden_dim + kActions * hidden_dim + kActions, 0.0) {
  if (input_dim == 0 || hidden_dim == 0) {
    throw InvalidInput("network dimensions must be positive");
  }
}

QNetwork QNetwork::random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  QNetwork net(input_dim, hidden_dim);
  const double scale1 = std::sqrt(2.0 / static_cast<double>(input_dim));
  const double scale2 = std::sqrt(1.0 / static_cast<double>(hidden_dim));
  for (double& w : net.w1()) w = scale1 * rng.normal();
  for (double& w : net.w2()) w = scale2 * rng.normal();
  return net;
}

std::array<double, QNetwork::kActions> QNetwork::forward(std::span<const double> state) const {
  if (state.size() != input_dim_) {
    throw DimensionError("state has length " + std::to_string(state.size()) +
                         ", network expects " + std::to_string(input_dim_));
  }
  const auto weights1 = w1();
  const auto bias1 = b1();
  const auto weights2 = w2();
  std::array<double, kActions> q{b2()[0], b2()[1]};
  for (std::size_t h = 0; h < hidden_dim_; ++h) {
    double z = bias1[h];
    const double* row = weights1.data() + h * input_dim_;
    for (std::size_t i = 0; i < input_dim_; ++i) z += row[i] * state[i];
    if (z <= 0.0) continue;
    q[0] += weights2[h] * z;
    q[1] += weights2[hidden_dim_ + h] * z;
  }
  return q;
}

std::string checkpoint_to_json(const QCheckpoint& checkpoint) {
  const QNetwork& net = checkpoint.net;
  auto as_array = [](std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); };
  json j;
  j["input_dim"] = net.input_dim();
  j["hidden_dim"] = net.hidden_dim();
  j["w1"] = as_array(net.w1());
  j["b1"] = as_array(net.b1());
  j["w2"] = as_array(net.w2());
  j["b2"] = as_array(net.b2());
  j["state_mode"] = std::string(state_mode_name(checkpoint.state_mode));
  j["seed"] = checkpoint.seed;
  j["epoch"] = checkpoint.epoch;
  return j.dump();
}

QCheckpoint checkpoint_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    const auto hidden_dim = j.at("hidden_dim").get<std::size_t>();
    QCheckpoint cp;
    cp.net = QNetwork(input_dim, hidden_dim);
    auto fill = [&](const char* key, std::span<double> dst) {
      const auto values = j.at(key).get<std::vector<double>>();
      if (values.size() != dst.size()) {
        throw ParseError(std::string("checkpoint field ") + key + " has " +
                         std::to_string(values.size()) + " values, expected " +
                         std::to_string(dst.size()));
      }
      std::copy(values.begin(), values.end(), dst.begin());
    };
    fill("w1", cp.net.w1());
    fill("b1", cp.net.b1());
    fill("w2", cp.net.w2());
    fill("b2", cp.net.b2());
    const auto mode = parse_state_mode(j.at("state_mode").get<std::string>());
    if (!mode) throw ParseError("checkpoint has unknown state_mode");
    cp.state_mode = *mode;
    cp.seed = j.at("seed").get<std::uint64_t>();
    cp.epoch = j.at("epoch").get<std::int64_t>();
    for (double w : cp.net.parameters()) {
      if (!std::isfinite(w)) throw ParseError("checkpoint holds a non-finite parameter");
    }
    return cp;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const QCheckpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(checkpoint) << '\n';
}

QCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return checkpoint_from_json(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace oms
