#pragma once

#include <cstddef>

namespace mgcrnn {

/// Flow channels per station: inflow and outflow.
inline constexpr std::size_t kChannels = 2;
inline constexpr std::size_t kInflow = 0;
inline constexpr std::size_t kOutflow = 1;

/// Column of (station, channel) in a slot-major flow table of shape T × (N·kChannels).
constexpr std::size_t flow_col(std::size_t station, std::size_t channel) {
  return station * kChannels + channel;
}

}  // namespace mgcrnn
