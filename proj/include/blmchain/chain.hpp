#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blmchain/difficulty.hpp"
#include "blmchain/error.hpp"
#include "blmchain/hash.hpp"
#include "blmchain/index_set.hpp"
#include "json.hpp"

namespace blmchain {

struct Transaction {
  Bytes payload;  // never empty

  bool operator==(const Transaction&) const = default;
};

/// Certificate that theta_star is a bounded local minimum of the block's
/// objective restricted to index_set. theta_star holds the problem's
/// canonical byte encoding.
struct ProofOfWork {
  Bytes theta_star;
  double objective_value = 0.0;
  IndexSet index_set;

  bool operator==(const ProofOfWork&) const = default;
};

struct BlockHeader {
  std::uint32_t version = 1;
  Hash256 prev_block_hash;
  Hash256 merkle_root;
  std::uint64_t timestamp_ms = 0;
  std::uint16_t difficulty_k = 0;
  Hash256 pow_commitment;

  bool operator==(const BlockHeader&) const = default;
};

struct Block {
  BlockHeader header;
  std::vector<Transaction> transactions;
  ProofOfWork pow;

  bool operator==(const Block&) const = default;
};

/// Parameters a chain is validated against. Serialized into the genesis
/// transaction so the genesis block id commits to them.
struct ChainParams {
  std::uint16_t k0 = 1;
  DifficultyParams difficulty;
  nlohmann::json problem;  // adapter description: kind, size, knobs, instance digest

  bool operator==(const ChainParams&) const = default;
};

struct Chain {
  ChainParams params;
  std::vector<Block> blocks;  // blocks[0] is genesis

  std::size_t height() const noexcept { return blocks.empty() ? 0 : blocks.size() - 1; }
  const Block& tip() const { return blocks.back(); }
};

/// Leaves are SHA-256 of each payload; parents hash the concatenation of their
/// two children; an odd level duplicates its last node.
inline Hash256 merkle_root(std::span<const Transaction> transactions) {
  if (transactions.empty()) {
    throw Error(ErrorCode::empty_transaction_list, "merkle_root needs at least one transaction");
  }
  std::vector<Hash256> level;
  level.reserve(transactions.size());
  for (const auto& tx : transactions) level.push_back(sha256(tx.payload));
  while (level.size() > 1) {
    if (level.size() % 2 == 1) level.push_back(level.back());
    std::vector<Hash256> next;
    next.reserve(level.size() / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
      next.push_back(sha256({level[i].view(), level[i + 1].view()}));
    }
    level = std::move(next);
  }
  return level.front();
}

/// Canonical header bytes: version(LE32) ‖ prev ‖ merkle ‖ timestamp(LE64) ‖ k(LE16) ‖ commitment.
inline Bytes serialize_header(const BlockHeader& h) {
  Bytes out;
  out.reserve(110);
  append_le(out, h.version);
  out.insert(out.end(), h.prev_block_hash.bytes.begin(), h.prev_block_hash.bytes.end());
  out.insert(out.end(), h.merkle_root.bytes.begin(), h.merkle_root.bytes.end());
  append_le(out, h.timestamp_ms);
  append_le(out, h.difficulty_k);
  out.insert(out.end(), h.pow_commitment.bytes.begin(), h.pow_commitment.bytes.end());
  return out;
}

inline Hash256 block_id(const BlockHeader& header) { return sha256(serialize_header(header)); }

/// Seed for index selection: binds S to the previous block and to this block's transactions.
inline Hash256 seed_hash(const Hash256& prev_block_hash, const Hash256& merkle_root) {
  return sha256({prev_block_hash.view(), merkle_root.view()});
}

inline Hash256 pow_commitment(const ProofOfWork& pow) { return sha256(pow.theta_star); }

// ---------------------------------------------------------------------------
// Chain parameters <-> genesis payload

inline nlohmann::json params_to_json(const ChainParams& p) {
  return nlohmann::json{
      {"format", "blmchain-1"},
      {"k0", p.k0},
      {"k_min", p.difficulty.k_min},
      {"k_max", p.difficulty.k_max},
      {"window", p.difficulty.window},
      {"low_s", p.difficulty.low_s},
      {"high_s", p.difficulty.high_s},
      {"problem", p.problem},
  };
}

inline ChainParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "blmchain-1") {
      throw Error(ErrorCode::parse_error, "unknown chain format");
    }
    ChainParams p;
    p.k0 = j.at("k0").get<std::uint16_t>();
    p.difficulty.k_min = j.at("k_min").get<std::uint16_t>();
    p.difficulty.k_max = j.at("k_max").get<std::uint16_t>();
    p.difficulty.window = j.at("window").get<std::uint32_t>();
    p.difficulty.low_s = j.at("low_s").get<double>();
    p.difficulty.high_s = j.at("high_s").get<double>();
    p.problem = j.at("problem");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("chain parameters: ") + e.what());
  }
}

inline Bytes params_payload(const ChainParams& p) {
  std::string text = params_to_json(p).dump();
  return Bytes(text.begin(), text.end());
}

/// Genesis: zero parent, K = k0, parameters as the only transaction, and an
/// empty proof of work whose commitment is all zeros.
inline Block make_genesis(const ChainParams& params) {
  Block g;
  g.transactions.push_back(Transaction{params_payload(params)});
  g.header.prev_block_hash = Hash256::zero();
  g.header.merkle_root = merkle_root(g.transactions);
  g.header.timestamp_ms = 0;
  g.header.difficulty_k = params.k0;
  g.header.pow_commitment = Hash256::zero();
  return g;
}

inline Chain make_chain(const ChainParams& params) {
  params.difficulty.check();
  if (params.k0 < params.difficulty.k_min || params.k0 > params.difficulty.k_max) {
    throw Error(ErrorCode::config_error, "k0 outside [k_min, k_max]");
  }
  return Chain{params, {make_genesis(params)}};
}

/// Block durations in seconds for heights 1..blocks.size()-1, oldest first.
inline std::vector<double> block_durations(std::span<const Block> blocks) {
  std::vector<double> out;
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    const auto a = blocks[i - 1].header.timestamp_ms;
    const auto b = blocks[i].header.timestamp_ms;
    out.push_back(b >= a ? static_cast<double>(b - a) / 1000.0 : 0.0);
  }
  return out;
}

/// K required of the block that extends `prefix` (genesis through the current tip).
inline std::uint16_t next_difficulty(std::span<const Block> prefix, const DifficultyParams& params) {
  const std::uint16_t current = prefix.back().header.difficulty_k;
  if (prefix.size() < 2) return current;  // block 1 inherits k0
  auto durations = block_durations(prefix);
  return adjust_difficulty(durations, current, params);
}

// ---------------------------------------------------------------------------
// Baseline hash-target miner, kept for comparison with the BLM scheme.

using UInt256 = boost::multiprecision::uint256_t;

inline UInt256 hash_to_uint(const Hash256& h) {
  UInt256 v;
  boost::multiprecision::import_bits(v, h.bytes.begin(), h.bytes.end(), 8, true);
  return v;
}

inline Hash256 baseline_hash(const Hash256& prev, const Hash256& root, std::uint64_t nonce) {
  Bytes n;
  append_le(n, nonce);
  return sha256({prev.view(), root.view(), ByteView(n)});
}

/// Smallest nonce in [0, max_nonce] whose hash is below target, or nullopt.
inline std::optional<std::uint64_t> mine_hash_baseline(const Hash256& prev, const Hash256& root,
                                                       const UInt256& target,
                                                       std::uint64_t max_nonce) {
  if (target == 0) return std::nullopt;
  for (std::uint64_t nonce = 0;; ++nonce) {
    if (hash_to_uint(baseline_hash(prev, root, nonce)) < target) return nonce;
    if (nonce == max_nonce) break;
  }
  return std::nullopt;
}

}  // namespace blmchain
