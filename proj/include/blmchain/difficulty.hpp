#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>

#include "blmchain/error.hpp"

namespace blmchain {

/// Controller for the degree of freedom K. Block times are averaged over the
/// trailing `window` blocks; above `high_s` K drops by one, below `low_s` it
/// rises by one, and the result is clamped to [k_min, k_max].
struct DifficultyParams {
  std::uint16_t k_min = 1;
  std::uint16_t k_max = 1;
  std::uint32_t window = 10;
  double low_s = 15.0;
  double high_s = 60.0;

  void check() const {
    if (k_min < 1 || k_min > k_max) throw Error(ErrorCode::config_error, "need 1 <= k_min <= k_max");
    if (window < 1) throw Error(ErrorCode::config_error, "window must be >= 1");
    if (!(low_s < high_s)) throw Error(ErrorCode::config_error, "need low_s < high_s");
  }

  bool operator==(const DifficultyParams&) const = default;
};

/// Next K from recent block durations (seconds, oldest first).
inline std::uint16_t adjust_difficulty(std::span<const double> recent_times, std::uint16_t k,
                                       const DifficultyParams& params) {
  int next = k;
  if (!recent_times.empty()) {
    std::size_t used = std::min<std::size_t>(params.window, recent_times.size());
    auto tail = recent_times.last(used);
    double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(used);
    if (mean > params.high_s) {
      --next;
    } else if (mean < params.low_s) {
      ++next;
    }
  }
  return static_cast<std::uint16_t>(std::clamp<int>(next, params.k_min, params.k_max));
}

}  // namespace blmchain
