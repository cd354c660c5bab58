#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stop_token>
#include <utility>

#include "blmchain/chain.hpp"
#include "blmchain/index_set.hpp"
#include "blmchain/problem.hpp"
#include "blmchain/random.hpp"

namespace blmchain {

struct SearchPolicy {
  /// Consecutive non-improving proposals before a candidate is certified.
  /// 0 means 50·K. Only used by non-adaptive problems; adaptive ones certify
  /// once their step scale drops below min_scale.
  std::uint64_t stall_limit = 0;
  /// Neighbourhoods up to this size are certified by full enumeration.
  std::uint64_t exhaustive_cap = 2'000'000;
  /// Draws used to certify when enumeration is impossible or too large.
  std::uint64_t certify_samples = 10'000;
  double min_scale = 0x1.0p-40;
  std::uint32_t scale_patience = 8;
  /// A candidate beaten only by equal-valued neighbours can never be a BLM;
  /// restart from a fresh random state (true) or stop there (false).
  bool restart_on_tie = true;
};

namespace detail {
struct NoCursor {};
template <typename P, bool = EnumerableProblem<P>>
struct CursorSlot {
  using type = NoCursor;
};
template <typename P>
struct CursorSlot<P, true> {
  using type = std::optional<typename P::Cursor>;
};
}  // namespace detail

/// Resumable search for a bounded local minimum within one index set.
///
/// Descends by random proposals with strict-improvement acceptance. After a
/// stall the candidate is certified: exhaustively (scan order rotated by a
/// random offset) when the neighbourhood is enumerable and small enough,
/// otherwise by sampling. A certification hit that improves resumes the
/// descent from it. Every objective evaluation counts as one iteration, which
/// lets callers meter work in virtual time.
template <SearchProblem P>
class BlmSearch {
 public:
  using State = typename P::State;

  struct Step {
    std::uint64_t iterations = 0;
    bool certified = false;
  };

  BlmSearch(const P& problem, IndexSet index_set, std::optional<State> warm_start, Rng rng,
            SearchPolicy policy = {})
      : problem_(&problem), set_(std::move(index_set)), rng_(std::move(rng)), policy_(policy) {
    if (policy_.stall_limit == 0) policy_.stall_limit = 50 * std::max<std::size_t>(1, set_.size());
    State start = warm_start ? std::move(*warm_start) : problem_->random_state(rng_);
    reset_to(problem_->constrain(start, set_));
  }

  /// Runs for at most `max_iterations` evaluations.
  Step advance(std::uint64_t max_iterations) {
    const std::uint64_t before = iterations_;
    const std::uint64_t limit = before + max_iterations;
    while (phase_ != Phase::done && iterations_ < limit) {
      switch (phase_) {
        case Phase::descend: descend_once(); break;
        case Phase::scan: scan_some(limit - iterations_); break;
        case Phase::sample: sample_once(); break;
        case Phase::done: break;
      }
    }
    return Step{iterations_ - before, phase_ == Phase::done};
  }

  bool certified() const noexcept { return phase_ == Phase::done; }
  const State& state() const noexcept { return current_; }
  double value() const noexcept { return value_; }
  const IndexSet& index_set() const noexcept { return set_; }
  std::uint64_t iterations() const noexcept { return iterations_; }
  std::uint64_t restarts() const noexcept { return restarts_; }

  ProofOfWork proof() const {
    return ProofOfWork{problem_->encode(current_), value_, set_};
  }

 private:
  enum class Phase { descend, scan, sample, done };

  void reset_to(State s) {
    current_ = std::move(s);
    value_ = problem_->objective(current_);
    failures_ = 0;
    scale_ = 1.0;
    phase_ = Phase::descend;
  }

  void move_to(State s, double v) {
    current_ = std::move(s);
    value_ = v;
    failures_ = 0;
    scale_ = P::adaptive_steps ? std::min(1.0, scale_ * 2.0) : 1.0;
  }

  void restart() {
    ++restarts_;
    ++iterations_;
    reset_to(problem_->constrain(problem_->random_state(rng_), set_));
  }

  void descend_once() {
    auto next = problem_->propose(current_, set_, rng_, scale_);
    ++iterations_;
    if (!next) {  // empty neighbourhood: vacuously minimal
      phase_ = Phase::done;
      return;
    }
    const double v = problem_->objective(*next);
    if (v < value_) {
      move_to(std::move(*next), v);
      return;
    }
    ++failures_;
    bool stalled = false;
    if constexpr (P::adaptive_steps) {
      if (failures_ % policy_.scale_patience == 0) scale_ *= 0.5;
      stalled = scale_ < policy_.min_scale;
    } else {
      stalled = failures_ >= policy_.stall_limit;
    }
    if (stalled) begin_certify();
  }

  void begin_certify() {
    tie_seen_ = false;
    if constexpr (EnumerableProblem<P>) {
      const std::uint64_t total = problem_->neighborhood_size(current_, set_);
      if (total == 0) {
        phase_ = Phase::done;
        return;
      }
      if (total <= policy_.exhaustive_cap) {
        rotation_ = uniform_index(rng_, total);
        cursor_.emplace(problem_->cursor(current_, set_));
        cursor_->skip(rotation_);
        second_pass_ = false;
        pass_left_ = total - rotation_;
        acceptance_ = Acceptance::at_most;
        phase_ = Phase::scan;
        return;
      }
    }
    samples_left_ = policy_.certify_samples;
    phase_ = Phase::sample;
  }

  void scan_some(std::uint64_t budget) {
    if constexpr (EnumerableProblem<P>) {
      if (pass_left_ == 0) {
        finish_pass();
        return;
      }
      auto r = problem_->scan(*cursor_, current_, value_, acceptance_, std::min(budget, pass_left_));
      iterations_ += r.examined;
      pass_left_ -= r.examined;
      if (r.hit) {
        if (r.value < value_) {
          cursor_.reset();
          move_to(std::move(*r.hit), r.value);
          phase_ = Phase::descend;
          return;
        }
        // Equal-valued neighbour: the claim fails, keep looking for a strict improvement.
        tie_seen_ = true;
        acceptance_ = Acceptance::strictly_better;
      }
      if (pass_left_ == 0 || r.finished) finish_pass();
    }
  }

  void finish_pass() {
    if constexpr (EnumerableProblem<P>) {
      if (!second_pass_ && rotation_ > 0) {
        second_pass_ = true;
        cursor_.emplace(problem_->cursor(current_, set_));
        pass_left_ = rotation_;
        return;
      }
      cursor_.reset();
      if (tie_seen_ && policy_.restart_on_tie) {
        restart();
      } else {
        phase_ = Phase::done;
      }
    }
  }

  void sample_once() {
    if (samples_left_ == 0) {
      phase_ = Phase::done;
      return;
    }
    --samples_left_;
    auto raw = problem_->sample_neighbor(current_, set_, rng_);
    ++iterations_;
    if (!raw) {
      phase_ = Phase::done;
      return;
    }
    if (problem_->objective(*raw) < value_) {
      State snapped = problem_->canonical(*raw, set_);
      const double v = problem_->objective(snapped);
      if (v < value_) {
        move_to(std::move(snapped), v);
        scale_ = 1.0;
        phase_ = Phase::descend;
      }
      // Otherwise the better region is finer than the encoding can express.
    }
  }

  const P* problem_;
  IndexSet set_;
  Rng rng_;
  SearchPolicy policy_;

  State current_{};
  double value_ = 0.0;
  Phase phase_ = Phase::descend;
  std::uint64_t iterations_ = 0;
  std::uint64_t restarts_ = 0;
  std::uint64_t failures_ = 0;
  double scale_ = 1.0;

  typename detail::CursorSlot<P>::type cursor_{};
  std::uint64_t rotation_ = 0;
  std::uint64_t pass_left_ = 0;
  bool second_pass_ = false;
  bool tie_seen_ = false;
  Acceptance acceptance_ = Acceptance::at_most;
  std::uint64_t samples_left_ = 0;
};

enum class MineStatus { certified, exhausted, cancelled };

struct MineResult {
  MineStatus status = MineStatus::exhausted;
  std::optional<ProofOfWork> pow;
  std::uint64_t iterations = 0;
  std::uint64_t restarts = 0;
};

/// Mines a BLM for the block whose seed hash is `seed` at difficulty `k`.
/// Polls `stop` between chunks so a peer announcement can cancel the attempt.
template <SearchProblem P>
MineResult mine(const P& problem, const Hash256& seed, std::uint16_t k,
                const std::optional<typename P::State>& warm_start, std::uint64_t budget, Rng& rng,
                const SearchPolicy& policy = {}, std::stop_token stop = {}) {
  MineResult result;
  if (budget == 0) return result;
  IndexSet set = index_select(seed, static_cast<std::uint32_t>(problem.dimension()), k);
  BlmSearch<P> search(problem, std::move(set), warm_start, Rng(rng()), policy);
  constexpr std::uint64_t chunk = 4096;
  while (search.iterations() < budget) {
    if (stop.stop_requested()) {
      result.status = MineStatus::cancelled;
      break;
    }
    search.advance(std::min(chunk, budget - search.iterations()));
    if (search.certified()) {
      result.status = MineStatus::certified;
      result.pow = search.proof();
      break;
    }
  }
  result.iterations = search.iterations();
  result.restarts = search.restarts();
  return result;
}

}  // namespace blmchain
