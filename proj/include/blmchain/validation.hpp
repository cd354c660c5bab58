#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "blmchain/chain.hpp"
#include "blmchain/error.hpp"
#include "blmchain/index_set.hpp"
#include "blmchain/problem.hpp"

namespace blmchain {

enum class Verdict {
  accept,
  counterexample,
  encoding_error,
  index_set_mismatch,
  objective_mismatch,
  constraint_violation,
};

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::counterexample: return "counterexample";
    case Verdict::encoding_error: return "encoding_error";
    case Verdict::index_set_mismatch: return "index_set_mismatch";
    case Verdict::objective_mismatch: return "objective_mismatch";
    case Verdict::constraint_violation: return "constraint_violation";
  }
  return "unknown";
}

template <typename State>
struct PowCheck {
  Verdict verdict = Verdict::accept;
  std::optional<State> counterexample;
  double counterexample_value = 0.0;
  bool exhaustive = false;
  std::uint64_t examined = 0;

  bool accepted() const noexcept { return verdict == Verdict::accept; }
};

/// The inexpensive part of validate_pow: index set, decoding, restriction and
/// the claimed objective value. Returns the decoded θ* when all hold.
template <SearchProblem P>
std::optional<typename P::State> precheck_pow(const P& problem, const Hash256& seed, const ProofOfWork& pow,
                                              std::uint16_t k, Verdict& verdict) {
  using State = typename P::State;
  try {
    if (index_select(seed, static_cast<std::uint32_t>(problem.dimension()), k) != pow.index_set) {
      verdict = Verdict::index_set_mismatch;
      return std::nullopt;
    }
  } catch (const Error&) {
    verdict = Verdict::index_set_mismatch;
    return std::nullopt;
  }
  State theta;
  try {
    theta = problem.decode(pow.theta_star);
  } catch (const Error&) {
    verdict = Verdict::encoding_error;
    return std::nullopt;
  }
  if (!problem.satisfies(theta, pow.index_set)) {
    verdict = Verdict::constraint_violation;
    return std::nullopt;
  }
  if (problem.objective(theta) != pow.objective_value) {
    verdict = Verdict::objective_mismatch;
    return std::nullopt;
  }
  verdict = Verdict::accept;
  return theta;
}

/// Checks a claimed BLM for the block with seed hash `seed` at difficulty `k`.
///
/// The index set must be the one the seed implies, theta_star must decode and
/// obey the index-set restriction, and its objective must match the claim
/// exactly. Then up to `sample_budget` neighbours are tried (the whole
/// neighbourhood when it is enumerable and fits the budget); the first one
/// with f(θ') <= f(θ*) is returned as a counterexample. Acceptance after
/// sampling is probabilistic; `rng` should be seeded per validator.
template <SearchProblem P>
PowCheck<typename P::State> validate_pow(const P& problem, const Hash256& seed,
                                         const ProofOfWork& pow, std::uint16_t k,
                                         std::uint64_t sample_budget, Rng& rng) {
  using State = typename P::State;
  PowCheck<State> out;
  auto checked = precheck_pow(problem, seed, pow, k, out.verdict);
  if (!checked) return out;
  const State& theta = *checked;
  const double value = pow.objective_value;

  auto found = [&](State s, double v) {
    out.verdict = Verdict::counterexample;
    out.counterexample = std::move(s);
    out.counterexample_value = v;
  };

  if constexpr (EnumerableProblem<P>) {
    const std::uint64_t total = problem.neighborhood_size(theta, pow.index_set);
    if (total <= sample_budget) {
      out.exhaustive = true;
      auto cursor = problem.cursor(theta, pow.index_set);
      auto r = problem.scan(cursor, theta, value, Acceptance::at_most, total);
      out.examined = r.examined;
      if (r.hit) found(std::move(*r.hit), r.value);
      return out;
    }
  }

  for (std::uint64_t i = 0; i < sample_budget; ++i) {
    auto candidate = problem.sample_neighbor(theta, pow.index_set, rng);
    if (!candidate) {  // empty neighbourhood
      out.exhaustive = true;
      break;
    }
    ++out.examined;
    const double v = problem.objective(*candidate);
    if (v <= value) {
      found(std::move(*candidate), v);
      break;
    }
  }
  return out;
}

/// Cheap deterministic check a gossip recipient runs on a reported counterexample:
/// θ' must be a legal neighbour of θ* under the block's index set and be no worse.
template <SearchProblem P>
bool verify_counterexample(const P& problem, const ProofOfWork& pow,
                           const typename P::State& candidate) {
  typename P::State theta;
  try {
    theta = problem.decode(pow.theta_star);
  } catch (const Error&) {
    return false;
  }
  for (auto i : pow.index_set) {
    if (i >= problem.dimension()) return false;
  }
  if (!problem.is_neighbor(theta, candidate, pow.index_set)) return false;
  return problem.objective(candidate) <= problem.objective(theta);
}

}  // namespace blmchain
