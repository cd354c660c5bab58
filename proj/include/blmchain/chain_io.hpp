#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blmchain/chain.hpp"
#include "blmchain/decimal.hpp"
#include "blmchain/error.hpp"
#include "blmchain/hash.hpp"
#include "json.hpp"

namespace blmchain {

// Chain file: a compact JSON array with one object per block. Every field has
// exactly one accepted spelling (lowercase hex, canonical base64, canonical
// decimals, no unknown keys), and each block repeats its id, so any edit to
// the file is either a parse error or a detectable change of content.

enum class ProblemKind { tsp, continuous };

inline ProblemKind problem_kind(const nlohmann::json& problem) {
  const auto it = problem.find("kind");
  if (it == problem.end() || !it->is_string()) throw Error(ErrorCode::parse_error, "problem kind missing");
  const auto k = it->get<std::string>();
  if (k == "tsp") return ProblemKind::tsp;
  if (k == "continuous") return ProblemKind::continuous;
  throw Error(ErrorCode::parse_error, "unknown problem kind '" + k + "'");
}

namespace detail {

inline nlohmann::json theta_to_json(ProblemKind kind, const Bytes& theta) {
  nlohmann::json out = nlohmann::json::array();
  if (theta.empty()) return out;
  if (kind == ProblemKind::tsp) {
    if (theta.size() % 2 != 0) throw Error(ErrorCode::encoding_error, "odd TSP encoding length");
    for (std::size_t i = 0; i < theta.size(); i += 2) out.push_back(theta[i] | (theta[i + 1] << 8));
  } else {
    std::string text(theta.begin(), theta.end());
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      out.push_back(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

inline Bytes theta_from_json(ProblemKind kind, const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::parse_error, "theta_star must be an array");
  Bytes out;
  if (kind == ProblemKind::tsp) {
    for (const auto& v : j) {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffff) {
        throw Error(ErrorCode::parse_error, "route entries must be 16-bit unsigned integers");
      }
      append_le(out, static_cast<std::uint16_t>(v.get<std::uint64_t>()));
    }
  } else {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_string()) throw Error(ErrorCode::parse_error, "coordinates must be strings");
      if (i) out.push_back(',');
      const auto s = j[i].get<std::string>();
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  return out;
}

inline void expect_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object() || j.size() != keys.size()) {
    throw Error(ErrorCode::parse_error, std::string(what) + ": unexpected field set");
  }
  for (const char* k : keys) {
    if (!j.contains(k)) throw Error(ErrorCode::parse_error, std::string(what) + ": missing " + k);
  }
}

template <typename UInt>
UInt get_unsigned(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() > std::numeric_limits<UInt>::max()) {
    throw Error(ErrorCode::parse_error, std::string(key) + " must be an unsigned integer");
  }
  return static_cast<UInt>(v.get<std::uint64_t>());
}

inline Hash256 get_hash(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw Error(ErrorCode::parse_error, std::string(key) + " must be a string");
  auto h = hash_from_hex(v.get<std::string>());
  if (!h) throw Error(ErrorCode::parse_error, std::string(key) + " is not 64 lowercase hex digits");
  return *h;
}

}  // namespace detail

inline nlohmann::json block_to_json(const Block& b, ProblemKind kind) {
  nlohmann::json txs = nlohmann::json::array();
  for (const auto& tx : b.transactions) txs.push_back(base64_encode(tx.payload));
  nlohmann::json pow{
      {"theta_star", detail::theta_to_json(kind, b.pow.theta_star)},
      {"objective_value", format_canonical(b.pow.objective_value)},
      {"index_set", b.pow.index_set.values()},
  };
  return nlohmann::json{
      {"block_id", to_hex(block_id(b.header))},
      {"version", b.header.version},
      {"prev_block_hash", to_hex(b.header.prev_block_hash)},
      {"merkle_root", to_hex(b.header.merkle_root)},
      {"timestamp_ms", b.header.timestamp_ms},
      {"difficulty_k", b.header.difficulty_k},
      {"pow_commitment", to_hex(b.header.pow_commitment)},
      {"transactions", txs},
      {"pow", pow},
  };
}

inline std::string chain_to_string(const Chain& chain) {
  const ProblemKind kind = problem_kind(chain.params.problem);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : chain.blocks) arr.push_back(block_to_json(b, kind));
  return arr.dump() + "\n";
}

struct ParsedChain {
  Chain chain;
  std::vector<Hash256> declared_ids;

  /// First height whose declared id differs from its recomputed header hash.
  std::optional<std::size_t> first_id_mismatch() const {
    for (std::size_t h = 0; h < declared_ids.size(); ++h) {
      if (declared_ids[h] != block_id(chain.blocks[h].header)) return h;
    }
    return std::nullopt;
  }
};

/// Parses a chain file; throws Error(parse_error) on anything malformed.
/// Semantic checks are left to validate_chain.
inline ParsedChain chain_from_string(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("chain file: ") + e.what());
  }
  if (!arr.is_array() || arr.empty()) throw Error(ErrorCode::parse_error, "chain file must be a non-empty array");
  // Files are written compactly with sorted keys; any other spelling of the
  // same JSON (whitespace, escapes, number forms) is rejected.
  if (arr.dump() + "\n" != text) throw Error(ErrorCode::parse_error, "chain file is not in canonical form");

  ParsedChain out;
  try {
    for (std::size_t h = 0; h < arr.size(); ++h) {
      const auto& j = arr[h];
      detail::expect_keys(j,
                          {"block_id", "version", "prev_block_hash", "merkle_root", "timestamp_ms",
                           "difficulty_k", "pow_commitment", "transactions", "pow"},
                          "block");
      Block b;
      b.header.version = detail::get_unsigned<std::uint32_t>(j, "version");
      b.header.prev_block_hash = detail::get_hash(j, "prev_block_hash");
      b.header.merkle_root = detail::get_hash(j, "merkle_root");
      b.header.timestamp_ms = detail::get_unsigned<std::uint64_t>(j, "timestamp_ms");
      b.header.difficulty_k = detail::get_unsigned<std::uint16_t>(j, "difficulty_k");
      b.header.pow_commitment = detail::get_hash(j, "pow_commitment");
      const auto& txs = j.at("transactions");
      if (!txs.is_array()) throw Error(ErrorCode::parse_error, "transactions must be an array");
      for (const auto& t : txs) {
        if (!t.is_string()) throw Error(ErrorCode::parse_error, "transaction must be a base64 string");
        auto payload = base64_decode(t.get<std::string>());
        if (!payload) throw Error(ErrorCode::parse_error, "transaction is not canonical base64");
        b.transactions.push_back(Transaction{std::move(*payload)});
      }
      if (h == 0) {
        // The genesis transaction carries the parameters, including the problem kind.
        if (b.transactions.size() != 1) throw Error(ErrorCode::parse_error, "genesis needs one transaction");
        const auto& p = b.transactions[0].payload;
        nlohmann::json params;
        try {
          params = nlohmann::json::parse(std::string(p.begin(), p.end()));
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::parse_error, std::string("genesis parameters: ") + e.what());
        }
        out.chain.params = params_from_json(params);
        problem_kind(out.chain.params.problem);
      }
      const auto& pow = j.at("pow");
      detail::expect_keys(pow, {"theta_star", "objective_value", "index_set"}, "pow");
      b.pow.theta_star = detail::theta_from_json(problem_kind(out.chain.params.problem), pow.at("theta_star"));
      const auto& ov = pow.at("objective_value");
      if (!ov.is_string()) throw Error(ErrorCode::parse_error, "objective_value must be a string");
      auto value = parse_canonical(ov.get<std::string>());
      if (!value) throw Error(ErrorCode::parse_error, "objective_value is not a canonical decimal");
      b.pow.objective_value = *value;
      const auto& idx = pow.at("index_set");
      if (!idx.is_array()) throw Error(ErrorCode::parse_error, "index_set must be an array");
      std::vector<std::uint32_t> indices;
      for (const auto& v : idx) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffffffffu) {
          throw Error(ErrorCode::parse_error, "index_set entries must be unsigned integers");
        }
        indices.push_back(static_cast<std::uint32_t>(v.get<std::uint64_t>()));
      }
      if (!std::is_sorted(indices.begin(), indices.end())) {
        throw Error(ErrorCode::parse_error, "index_set must be sorted");
      }
      b.pow.index_set = IndexSet(std::move(indices));
      const auto& id = j.at("block_id");
      if (!id.is_string() || !hash_from_hex(id.get<std::string>())) {
        throw Error(ErrorCode::parse_error, "block_id is not 64 lowercase hex digits");
      }
      out.declared_ids.push_back(*hash_from_hex(id.get<std::string>()));
      out.chain.blocks.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("chain file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::parse_error) throw;
    throw Error(ErrorCode::parse_error, e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files and plain-number formatting

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::parse_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::config_error, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::config_error, "write failed for " + path);
}

/// Shortest round-trip decimal, locale independent.
inline std::string format_number(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

/// Fixed notation with `digits` decimals, locale independent.
inline std::string format_fixed(double x, int digits) {
  char buf[512];
  auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, digits);
  return std::string(buf, r.ptr);
}

}  // namespace blmchain
