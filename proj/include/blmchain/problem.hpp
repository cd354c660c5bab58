#pragma once

#include <concepts>
#include <cstdint>
#include <optional>

#include "blmchain/hash.hpp"
#include "blmchain/index_set.hpp"
#include "blmchain/random.hpp"
#include "json.hpp"

namespace blmchain {

/// What a neighbour must achieve to count as a hit during a scan.
enum class Acceptance {
  strictly_better,  // f(θ') <  bound: an improving move
  at_most,          // f(θ') <= bound: defeats a BLM claim
};

template <typename State>
struct ScanResult {
  std::optional<State> hit;
  double value = 0.0;
  std::uint64_t examined = 0;
  bool finished = false;  // cursor ran off the end of the neighbourhood
};

/// Adapter contract between a concrete optimisation problem and the engine.
///
///  - dimension(): N, the number of coordinates an IndexSet draws from.
///  - constrain(θ, S): repair θ so it obeys the restriction implied by S.
///    Idempotent; satisfies(constrain(θ, S), S) holds.
///  - propose(θ, S, rng, scale): a random move used while descending.
///    Returns nullopt when the neighbourhood is empty. Adaptive problems
///    shrink their step with `scale` in (0, 1].
///  - sample_neighbor(θ, S, rng): a draw from the full BLM neighbourhood,
///    as a validator would pick it.
///  - canonical(θ, S): project a raw point onto the encodable lattice.
///  - is_neighbor(θ*, θ', S): θ' lies in the neighbourhood of θ*.
///  - encode/decode: canonical bytes; decode throws Error(encoding_error).
template <typename P>
concept SearchProblem = requires(const P& p, const typename P::State& s, const IndexSet& set,
                                 Rng& rng, double scale, ByteView bytes) {
  typename P::State;
  { P::adaptive_steps } -> std::convertible_to<bool>;
  { p.dimension() } -> std::convertible_to<std::size_t>;
  { p.objective(s) } -> std::same_as<double>;
  { p.random_state(rng) } -> std::same_as<typename P::State>;
  { p.constrain(s, set) } -> std::same_as<typename P::State>;
  { p.satisfies(s, set) } -> std::same_as<bool>;
  { p.propose(s, set, rng, scale) } -> std::same_as<std::optional<typename P::State>>;
  { p.sample_neighbor(s, set, rng) } -> std::same_as<std::optional<typename P::State>>;
  { p.canonical(s, set) } -> std::same_as<typename P::State>;
  { p.is_neighbor(s, s, set) } -> std::same_as<bool>;
  { p.encode(s) } -> std::same_as<Bytes>;
  { p.decode(bytes) } -> std::same_as<typename P::State>;
  { p.describe() } -> std::same_as<nlohmann::json>;
};

/// Problems whose neighbourhood can be listed exhaustively through a resumable cursor.
template <typename P>
concept EnumerableProblem =
    SearchProblem<P> &&
    requires(const P& p, const typename P::State& s, const IndexSet& set,
             typename P::Cursor& cursor, double bound, Acceptance acc, std::uint64_t n) {
      { p.neighborhood_size(s, set) } -> std::same_as<std::uint64_t>;
      { p.cursor(s, set) } -> std::same_as<typename P::Cursor>;
      { cursor.skip(n) } -> std::same_as<std::uint64_t>;
      { p.scan(cursor, s, bound, acc, n) } -> std::same_as<ScanResult<typename P::State>>;
    };

}  // namespace blmchain
