#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blmchain/chain.hpp"
#include "blmchain/random.hpp"
#include "blmchain/validation.hpp"

namespace blmchain {

struct ValidationReport {
  bool valid = true;
  std::size_t height = 0;  // first failing height when !valid
  std::string reason;
  std::uint64_t neighbours_examined = 0;

  static ValidationReport fail(std::size_t h, std::string why) {
    return ValidationReport{false, h, std::move(why), 0};
  }
};

/// Checks everything about block `h` that does not involve the objective:
/// linkage, Merkle root, commitment, difficulty.
inline std::optional<std::string> check_block_structure(std::span<const Block> blocks, std::size_t h,
                                                        const ChainParams& params) {
  const Block& b = blocks[h];
  if (b.header.version != 1) return "unsupported version";
  if (b.transactions.empty()) return "empty transaction list";
  for (const auto& tx : b.transactions) {
    if (tx.payload.empty()) return "empty transaction payload";
  }
  if (merkle_root(b.transactions) != b.header.merkle_root) return "merkle root mismatch";
  if (h == 0) {
    if (!b.header.prev_block_hash.is_zero()) return "genesis parent must be zero";
    if (b.header.difficulty_k != params.k0) return "genesis difficulty differs from k0";
    if (b.header.timestamp_ms != 0) return "genesis timestamp must be zero";
    if (b.transactions.size() != 1 || b.transactions[0].payload != params_payload(params)) {
      return "genesis does not carry the chain parameters";
    }
    if (!b.header.pow_commitment.is_zero() || b != make_genesis(params)) return "malformed genesis";
    return std::nullopt;
  }
  const Block& parent = blocks[h - 1];
  if (b.header.prev_block_hash != block_id(parent.header)) return "previous block hash mismatch";
  if (b.header.timestamp_ms < parent.header.timestamp_ms) return "timestamp precedes parent";
  if (b.header.pow_commitment != pow_commitment(b.pow)) return "pow commitment mismatch";
  if (b.header.difficulty_k != next_difficulty(blocks.first(h), params.difficulty)) {
    return "difficulty mismatch";
  }
  if (b.pow.index_set.size() != b.header.difficulty_k) return "index set size differs from K";
  return std::nullopt;
}

/// Full check of block `h` (h >= 1) against its prefix, including the BLM claim.
template <SearchProblem P>
ValidationReport validate_block(const P& problem, std::span<const Block> blocks, std::size_t h,
                                const ChainParams& params, std::uint64_t sample_budget, Rng& rng) {
  if (auto why = check_block_structure(blocks, h, params)) return ValidationReport::fail(h, *why);
  ValidationReport ok;
  if (h == 0) return ok;
  const Block& b = blocks[h];
  const Hash256 seed = seed_hash(b.header.prev_block_hash, b.header.merkle_root);
  auto check = validate_pow(problem, seed, b.pow, b.header.difficulty_k, sample_budget, rng);
  ok.neighbours_examined = check.examined;
  if (!check.accepted()) return ValidationReport::fail(h, std::string(to_string(check.verdict)));
  return ok;
}

/// Validates a whole chain and reports the lowest failing height. Cheap
/// checks (structure and the claimed proof's bookkeeping) run over every
/// block first, so neighbour scans are only spent below the first cheap
/// failure. `seed` feeds the per-height sampling streams so independent
/// validators can use different neighbours.
template <SearchProblem P>
ValidationReport validate_chain(const Chain& chain, const P& problem, std::uint64_t sample_budget,
                                std::uint64_t seed = 0) {
  if (chain.blocks.empty()) return ValidationReport::fail(0, "chain has no blocks");
  if (problem.describe() != chain.params.problem) {
    return ValidationReport::fail(0, "problem does not match chain parameters");
  }
  const std::span<const Block> blocks(chain.blocks);
  std::optional<ValidationReport> cheap_failure;
  for (std::size_t h = 0; h < blocks.size() && !cheap_failure; ++h) {
    if (auto why = check_block_structure(blocks, h, chain.params)) {
      cheap_failure = ValidationReport::fail(h, *why);
    } else if (h > 0) {
      const auto& b = blocks[h];
      Verdict v = Verdict::accept;
      precheck_pow(problem, seed_hash(b.header.prev_block_hash, b.header.merkle_root), b.pow,
                   b.header.difficulty_k, v);
      if (v != Verdict::accept) cheap_failure = ValidationReport::fail(h, std::string(to_string(v)));
    }
  }
  const std::size_t scan_end = cheap_failure ? cheap_failure->height : blocks.size();
  ValidationReport total;
  for (std::size_t h = 1; h < scan_end; ++h) {
    Rng rng = make_rng(seed, "validate", h);
    auto r = validate_block(problem, blocks, h, chain.params, sample_budget, rng);
    if (!r.valid) return r;
    total.neighbours_examined += r.neighbours_examined;
  }
  if (cheap_failure) return *cheap_failure;
  total.height = chain.height();
  return total;
}

}  // namespace blmchain
