#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace oms {

/// How a (memory, instance) pair is turned into a Q-network input.
enum class StateMode {
  /// [3 cosines, 3 instance-presence flags, 3 slot-filled flags,
  ///  best combined score among the other casts]; length 10.
  kSummary,
  /// Cast memory row (3d) followed by the instance (3d); length 6d.
  kRaw,
};

std::string_view state_mode_name(StateMode mode);
std::optional<StateMode> parse_state_mode(std::string_view text);
std::size_t state_size(StateMode mode, std::size_t dim);

struct StateVector {
  StateMode mode = StateMode::kSummary;
  std::vector<double> values;

  friend bool operator==(const StateVector&, const StateVector&) = default;
};

}  // namespace oms
