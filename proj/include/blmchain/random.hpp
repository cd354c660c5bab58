#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "blmchain/hash.hpp"

namespace blmchain {

using Rng = std::mt19937_64;

// The standard distributions are implementation-defined; these helpers keep
// every draw reproducible across standard libraries.

/// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Uniform double in the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

/// Named sub-stream of a master seed: SHA-256(master ‖ label ‖ a ‖ b), first 8 bytes.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  Bytes buf;
  append_le(buf, master);
  buf.insert(buf.end(), label.begin(), label.end());
  append_le(buf, a);
  append_le(buf, b);
  Hash256 h = sha256(buf);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed |= static_cast<std::uint64_t>(h.bytes[i]) << (8 * i);
  return seed;
}

inline Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(master, label, a, b));
}

}  // namespace blmchain
