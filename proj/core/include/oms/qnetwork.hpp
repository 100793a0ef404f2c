#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oms/rng.hpp"
#include "oms/state.hpp"

namespace oms {

/// Action-value network: affine -> rectifier -> affine, two outputs
/// (Q for "no" and Q for "yes").
///
/// Parameters live in one flat buffer laid out as w1 (hidden x input,
/// row-major), b1 (hidden), w2 (2 x hidden, row-major), b2 (2).
class QNetwork {
 public:
  static constexpr std::size_t kActions = 2;
  static constexpr std::size_t kDefaultHidden = 64;

  QNetwork() = default;
  /// All-zero parameters.
  QNetwork(std::size_t input_dim, std::size_t hidden_dim);
  /// He-initialised first layer, small second layer, zero biases.
  static QNetwork random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  [[nodiscard]] std::size_t input_dim() const { return input_dim_; }
  [[nodiscard]] std::size_t hidden_dim() const { return hidden_dim_; }

  /// Throws DimensionError if state.size() != input_dim().
  [[nodiscard]] std::array<double, kActions> forward(std::span<const double> state) const;

  [[nodiscard]] std::span<double> parameters() { return params_; }
  [[nodiscard]] std::span<const double> parameters() const { return params_; }
  [[nodiscard]] std::span<double> w1() { return params_span(0, hidden_dim_ * input_dim_); }
  [[nodiscard]] std::span<double> b1() { return params_span(b1_offset(), hidden_dim_); }
  [[nodiscard]] std::span<double> w2() { return params_span(w2_offset(), kActions * hidden_dim_); }
  [[nodiscard]] std::span<double> b2() { return params_span(b2_offset(), kActions); }
  [[nodiscard]] std::span<const double> w1() const { return cparams(0, hidden_dim_ * input_dim_); }
  [[nodiscard]] std::span<const double> b1() const { return cparams(b1_offset(), hidden_dim_); }
  [[nodiscard]] std::span<const double> w2() const {
    return cparams(w2_offset(), kActions * hidden_dim_);
  }
  [[nodiscard]] std::span<const double> b2() const { return cparams(b2_offset(), kActions); }

  [[nodiscard]] std::size_t b1_offset() const { return hidden_dim_ * input_dim_; }
  [[nodiscard]] std::size_t w2_offset() const { return b1_offset() + hidden_dim_; }
  [[nodiscard]] std::size_t b2_offset() const { return w2_offset() + kActions * hidden_dim_; }

  friend bool operator==(const QNetwork&, const QNetwork&) = default;

 private:
  std::span<double> params_span(std::size_t offset, std::size_t n) {
    return std::span<double>(params_).subspan(offset, n);
  }
  std::span<const double> cparams(std::size_t offset, std::size_t n) const {
    return std::span<const double>(params_).subspan(offset, n);
  }

  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::vector<double> params_;
};

/// Network plus the metadata stored alongside it on disk.
struct QCheckpoint {
  QNetwork net;
  StateMode state_mode = StateMode::kSummary;
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;

  friend bool operator==(const QCheckpoint&, const QCheckpoint&) = default;
};

std::string checkpoint_to_json(const QCheckpoint& checkpoint);
QCheckpoint checkpoint_from_json(std::string_view text);
void save_checkpoint(const std::filesystem::path& path, const QCheckpoint& checkpoint);
QCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace oms
