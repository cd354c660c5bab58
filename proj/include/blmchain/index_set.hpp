#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "blmchain/error.hpp"
#include "blmchain/hash.hpp"

namespace blmchain {

/// K distinct dimension indices in [0, N), kept sorted so equal sets compare equal.
class IndexSet {
 public:
  IndexSet() = default;

  explicit IndexSet(std::vector<std::uint32_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
      throw Error(ErrorCode::invalid_k, "index set contains duplicates");
    }
  }

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(std::uint32_t i) const noexcept {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }
  const std::vector<std::uint32_t>& values() const noexcept { return indices_; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  bool operator==(const IndexSet&) const = default;

 private:
  std::vector<std::uint32_t> indices_;
};

namespace detail {

// In-place big-endian long division of a 256-bit value by a small divisor.
inline std::uint32_t divmod_be(std::array<std::uint8_t, 32>& value, std::uint32_t divisor) {
  std::uint64_t rem = 0;
  for (auto& byte : value) {
    std::uint64_t cur = (rem << 8) | byte;
    byte = static_cast<std::uint8_t>(cur / divisor);
    rem = cur % divisor;
  }
  return static_cast<std::uint32_t>(rem);
}

inline bool is_zero(const std::array<std::uint8_t, 32>& value) {
  return std::all_of(value.begin(), value.end(), [](std::uint8_t b) { return b == 0; });
}

}  // namespace detail

/// Picks K distinct indices out of N from a block seed.
///
/// The seed is read as a big-endian 256-bit integer. Each round takes the
/// value mod N as a candidate index (kept if unseen) and then divides the
/// value by N. When the value runs out before K indices are collected, the
/// last 32-byte hash is re-hashed with SHA-256 and extraction continues from
/// the new value. The result depends only on (seed, N, K).
inline IndexSet index_select(const Hash256& seed, std::uint32_t n, std::uint32_t k) {
  if (k < 1 || k > n) {
    throw Error(ErrorCode::invalid_k,
                "K=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::uint32_t> picked;
  picked.reserve(k);
  std::vector<bool> seen(n, false);
  Hash256 current = seed;
  std::array<std::uint8_t, 32> value = current.bytes;
  while (picked.size() < k) {
    if (detail::is_zero(value)) {
      current = sha256(current.view());
      value = current.bytes;
      continue;
    }
    std::uint32_t t = detail::divmod_be(value, n);
    if (!seen[t]) {
      seen[t] = true;
      picked.push_back(t);
    }
  }
  return IndexSet(std::move(picked));
}

using BigInt = boost::multiprecision::cpp_int;

/// Number of K-subsets of N dimensions, exact.
inline BigInt count_subspaces(std::uint32_t n, std::uint32_t k) {
  if (k > n) {
    throw Error(ErrorCode::invalid_k,
                "K=" + std::to_string(k) + " exceeds N=" + std::to_string(n));
  }
  k = std::min(k, n - k);
  BigInt result = 1;
  for (std::uint32_t i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

}  // namespace blmchain
