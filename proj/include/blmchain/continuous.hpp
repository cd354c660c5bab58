#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "blmchain/decimal.hpp"
#include "blmchain/error.hpp"
#include "blmchain/hash.hpp"
#include "blmchain/index_set.hpp"
#include "blmchain/problem.hpp"
#include "blmchain/random.hpp"
#include "blmchain/search.hpp"
#include "json.hpp"

namespace blmchain::continuous {

/// sin(x) + 0.1·sin(20x): a smooth basin with fine ripples on [0, 2π].
inline double f_demo(double x) noexcept { return std::sin(x) + 0.1 * std::sin(20.0 * x); }

// ---------------------------------------------------------------------------
// Difficulty knobs

/// Window half-width per in-scope coordinate.
struct DeltaRule {
  enum class Kind { relative, absolute };
  Kind kind = Kind::relative;
  double absolute = 0.5;  // used by Kind::absolute
  double floor = 1e-6;    // lower bound for Kind::relative

  /// Relative: max(K/N·|θᵢ|, floor). Absolute: the fixed width.
  double operator()(std::size_t k, std::size_t n, double theta_i) const noexcept {
    if (kind == Kind::absolute) return absolute;
    const double d = static_cast<double>(k) / static_cast<double>(n) * std::abs(theta_i);
    return std::max(d, floor);
  }
};

inline double delta_rule(std::size_t k, std::size_t n, double theta_i, double delta_min = 1e-6) {
  return DeltaRule{DeltaRule::Kind::relative, 0.0, delta_min}(k, n, theta_i);
}

enum class Objective { demo, sphere };

inline std::string_view to_string(Objective o) noexcept {
  return o == Objective::demo ? "demo" : "sphere";
}

struct ContinuousSpec {
  Objective objective = Objective::demo;
  std::size_t dimension = 1;
  double lower = 0.0;
  double upper = 2.0 * std::numbers::pi;
  int sig_figs_min = 1;     // sig figs = clamp(max(sig_figs_min, K + sig_figs_offset), 1, 15)
  int sig_figs_offset = 0;
  DeltaRule delta;

  void check() const {
    if (dimension < 1) throw Error(ErrorCode::config_error, "dimension must be >= 1");
    if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
      throw Error(ErrorCode::config_error, "bounds must satisfy lower < upper");
    }
    if (delta.kind == DeltaRule::Kind::absolute && !(delta.absolute > 0.0)) {
      throw Error(ErrorCode::config_error, "absolute delta must be positive");
    }
    if (!(delta.floor > 0.0)) throw Error(ErrorCode::config_error, "delta floor must be positive");
  }
};

inline double evaluate(Objective o, std::span<const double> theta) noexcept {
  double total = 0.0;
  for (double x : theta) total += o == Objective::demo ? f_demo(x) : x * x;
  return total;
}

inline nlohmann::json spec_to_json(const ContinuousSpec& s) {
  return nlohmann::json{
      {"kind", "continuous"},
      {"objective", std::string(to_string(s.objective))},
      {"dimension", s.dimension},
      {"lower", s.lower},
      {"upper", s.upper},
      {"sig_figs_min", s.sig_figs_min},
      {"sig_figs_offset", s.sig_figs_offset},
      {"delta_rule", s.delta.kind == DeltaRule::Kind::relative ? "relative" : "absolute"},
      {"delta_absolute", s.delta.absolute},
      {"delta_floor", s.delta.floor},
  };
}

inline ContinuousSpec spec_from_json(const nlohmann::json& j) {
  try {
    ContinuousSpec s;
    const auto obj = j.at("objective").get<std::string>();
    if (obj == "demo") {
      s.objective = Objective::demo;
    } else if (obj == "sphere") {
      s.objective = Objective::sphere;
    } else {
      throw Error(ErrorCode::config_error, "unknown objective " + obj);
    }
    s.dimension = j.at("dimension").get<std::size_t>();
    s.lower = j.at("lower").get<double>();
    s.upper = j.at("upper").get<double>();
    s.sig_figs_min = j.value("sig_figs_min", 1);
    s.sig_figs_offset = j.value("sig_figs_offset", 0);
    const auto rule = j.value("delta_rule", std::string("relative"));
    if (rule != "relative" && rule != "absolute") throw Error(ErrorCode::config_error, "unknown delta rule");
    s.delta.kind = rule == "relative" ? DeltaRule::Kind::relative : DeltaRule::Kind::absolute;
    s.delta.absolute = j.value("delta_absolute", 0.5);
    s.delta.floor = j.value("delta_floor", 1e-6);
    s.check();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("continuous problem: ") + e.what());
  }
}

using ContinuousState = std::vector<double>;

/// Continuous objective as a BLM search problem.
///
/// Coordinates in S live on the lattice of numbers with sig_figs(K)
/// significant figures; the others are frozen. A neighbour changes only
/// coordinates in S, each by less than its δ, and stays on the lattice and
/// inside the box.
class ContinuousProblem {
 public:
  using State = ContinuousState;
  static constexpr bool adaptive_steps = true;

  explicit ContinuousProblem(ContinuousSpec spec) : spec_(spec) { spec_.check(); }

  const ContinuousSpec& spec() const noexcept { return spec_; }
  std::size_t dimension() const noexcept { return spec_.dimension; }

  double objective(const State& s) const noexcept { return evaluate(spec_.objective, s); }

  int sig_figs(std::size_t k) const noexcept {
    const int want = std::max(spec_.sig_figs_min, static_cast<int>(k) + spec_.sig_figs_offset);
    return std::clamp(want, 1, max_sig_figs);
  }

  double delta(std::size_t k, double center) const noexcept {
    return spec_.delta(k, spec_.dimension, center);
  }

  /// Nearest lattice point inside the box.
  double snap(double x, int sig) const {
    x = std::clamp(x, spec_.lower, spec_.upper);
    double r = sig_fig_round(x, sig);
    if (r > spec_.upper) r = sig_fig_round(x, sig, RoundMode::toward_neg_inf);
    if (r < spec_.lower) r = sig_fig_round(x, sig, RoundMode::toward_pos_inf);
    return r;
  }

  State random_state(Rng& rng) const {
    State s(spec_.dimension);
    for (auto& x : s) x = spec_.lower + (spec_.upper - spec_.lower) * uniform_unit(rng);
    return s;
  }

  State constrain(const State& s, const IndexSet& set) const {
    if (s.size() != spec_.dimension) throw Error(ErrorCode::config_error, "state has wrong dimension");
    State out = s;
    for (auto& x : out) x = std::clamp(x, spec_.lower, spec_.upper);
    const int sig = sig_figs(set.size());
    for (auto i : set) out[i] = snap(out[i], sig);
    return out;
  }

  bool satisfies(const State& s, const IndexSet& set) const {
    if (s.size() != spec_.dimension) return false;
    for (double x : s) {
      if (!std::isfinite(x) || x < spec_.lower || x > spec_.upper) return false;
    }
    const int sig = sig_figs(set.size());
    for (auto i : set) {
      if (i >= s.size() || sig_fig_round(s[i], sig) != s[i]) return false;
    }
    return true;
  }

  /// Moves one in-scope coordinate: usually within scale·δ, sometimes anywhere in the box.
  std::optional<State> propose(const State& s, const IndexSet& set, Rng& rng, double scale) const {
    if (set.size() == 0) return std::nullopt;
    const std::uint32_t i = set.values()[uniform_index(rng, set.size())];
    State out = s;
    double x;
    if (uniform_index(rng, 4) == 0) {
      x = spec_.lower + (spec_.upper - spec_.lower) * uniform_unit(rng);
    } else {
      const double d = delta(set.size(), s[i]) * scale;
      x = s[i] + (2.0 * uniform_open(rng) - 1.0) * d;
    }
    out[i] = snap(x, sig_figs(set.size()));
    return out;
  }

  /// Uniform draw from the δ-box, projected onto the lattice.
  std::optional<State> sample_neighbor(const State& s, const IndexSet& set, Rng& rng) const {
    if (set.size() == 0) return std::nullopt;
    const int sig = sig_figs(set.size());
    State out = s;
    for (int attempt = 0; attempt < 100; ++attempt) {
      bool moved = false;
      bool inside = true;
      for (auto i : set) {
        const double d = delta(set.size(), s[i]);
        const double x = snap(s[i] + (2.0 * uniform_open(rng) - 1.0) * d, sig);
        inside = inside && std::abs(x - s[i]) < d;
        moved = moved || x != s[i];
        out[i] = x;
      }
      if (moved && inside) return out;
    }
    return std::nullopt;  // the box holds no other lattice point (or almost none)
  }

  State canonical(const State& s, const IndexSet& set) const { return constrain(s, set); }

  bool is_neighbor(const State& center, const State& candidate, const IndexSet& set) const {
    if (center.size() != spec_.dimension || candidate.size() != spec_.dimension) return false;
    if (!satisfies(candidate, set)) return false;
    bool moved = false;
    for (std::size_t i = 0; i < center.size(); ++i) {
      if (set.contains(static_cast<std::uint32_t>(i))) {
        if (!(std::abs(candidate[i] - center[i]) < delta(set.size(), center[i]))) return false;
        moved = moved || candidate[i] != center[i];
      } else if (candidate[i] != center[i]) {
        return false;
      }
    }
    return moved;
  }

  Bytes encode(const State& s) const {
    std::string text;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) text += ',';
      text += format_canonical(s[i]);
    }
    return Bytes(text.begin(), text.end());
  }

  State decode(ByteView bytes) const {
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    State s;
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      const auto part = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
      auto v = parse_canonical(part);
      if (!v) throw Error(ErrorCode::encoding_error, "non-canonical coordinate '" + std::string(part) + "'");
      s.push_back(*v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (s.size() != spec_.dimension) throw Error(ErrorCode::encoding_error, "wrong coordinate count");
    return s;
  }

  nlohmann::json describe() const { return spec_to_json(spec_); }

 private:
  ContinuousSpec spec_;
};

struct ContinuousCheck {
  bool accepted = true;
  std::optional<ContinuousState> counterexample;
  double counterexample_value = 0.0;
};

/// Direct sampling test of the bounded-local-minimum condition: θ' is drawn
/// uniformly from the open box |θ'ᵢ − θ*ᵢ| < δᵢ over i in S (other
/// coordinates frozen), clamped to [lower, upper]. The first θ' ≠ θ* with
/// f(θ') <= f(θ*) is a counterexample. `delta` holds one width per coordinate.
template <typename F>
ContinuousCheck blm_check_continuous(F&& f, const ContinuousState& theta, const IndexSet& set,
                                     std::span<const double> delta, std::uint64_t samples, Rng& rng,
                                     double lower = -std::numeric_limits<double>::infinity(),
                                     double upper = std::numeric_limits<double>::infinity()) {
  if (samples < 1) throw Error(ErrorCode::config_error, "samples must be >= 1");
  if (delta.size() != theta.size()) throw Error(ErrorCode::config_error, "one delta per coordinate");
  ContinuousCheck out;
  const double base = f(std::span<const double>(theta));
  ContinuousState trial = theta;
  for (std::uint64_t n = 0; n < samples; ++n) {
    for (auto i : set) {
      trial[i] = std::clamp(theta[i] + (2.0 * uniform_open(rng) - 1.0) * delta[i], lower, upper);
    }
    if (trial == theta) continue;
    const double v = f(std::span<const double>(trial));
    if (v <= base) {
      out.accepted = false;
      out.counterexample = trial;
      out.counterexample_value = v;
      return out;
    }
  }
  return out;
}

/// Randomised descent over the coordinates in S only, certified by sampling
/// the δ-box. Returns the lattice point reached; throws Exhausted if the
/// budget runs out first.
inline ContinuousState coordinate_descent(const ContinuousProblem& problem, const ContinuousState& start,
                                          const IndexSet& set, std::uint64_t budget, Rng& rng,
                                          SearchPolicy policy = {}) {
  if (set.size() == 0) throw Error(ErrorCode::invalid_k, "K must be >= 1");
  BlmSearch<ContinuousProblem> search(problem, set, start, Rng(rng()), policy);
  search.advance(budget);
  if (!search.certified()) throw Error(ErrorCode::exhausted, "descent budget consumed");
  return search.state();
}

}  // namespace blmchain::continuous
