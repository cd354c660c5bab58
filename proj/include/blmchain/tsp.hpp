#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blmchain/error.hpp"
#include "blmchain/hash.hpp"
#include "blmchain/index_set.hpp"
#include "blmchain/problem.hpp"
#include "blmchain/random.hpp"
#include "blmchain/search.hpp"
#include "json.hpp"

namespace blmchain::tsp {

struct City {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const City&) const = default;
};

/// Euclidean instance; city 0 is the depot every tour starts and ends at.
struct TspInstance {
  std::string name;
  std::vector<City> cities;

  std::size_t size() const noexcept { return cities.size(); }

  void check() const {
    if (cities.size() < 2) throw Error(ErrorCode::config_error, "instance needs at least 2 cities");
    if (cities.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::instance_too_large, "city labels are 16-bit");
    }
    for (const auto& c : cities) {
      if (!std::isfinite(c.x) || !std::isfinite(c.y)) {
        throw Error(ErrorCode::config_error, "city coordinates must be finite");
      }
    }
  }
};

inline double distance(const City& a, const City& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

/// Visit order of cities 1..N-1; the depot is implicit at both ends.
struct Route {
  std::vector<std::uint16_t> cities;

  std::size_t size() const noexcept { return cities.size(); }
  std::uint16_t operator[](std::size_t i) const noexcept { return cities[i]; }
  bool operator==(const Route&) const = default;
};

inline bool is_valid_route(const Route& route, std::size_t n) {
  if (n < 2 || route.size() != n - 1) return false;
  std::vector<bool> seen(n, false);
  for (auto c : route.cities) {
    if (c == 0 || c >= n || seen[c]) return false;
    seen[c] = true;
  }
  return true;
}

inline void require_valid(const Route& route, std::size_t n) {
  if (!is_valid_route(route, n)) {
    throw Error(ErrorCode::invalid_route, "route is not a permutation of 1.." + std::to_string(n - 1));
  }
}

/// Tour length 0 → θ₁ → … → θ_{N-1} → 0, summed in that order.
inline double route_length(const TspInstance& instance, const Route& route) {
  require_valid(route, instance.size());
  const auto& c = instance.cities;
  double total = 0.0;
  std::uint16_t prev = 0;
  for (auto city : route.cities) {
    total += distance(c[prev], c[city]);
    prev = city;
  }
  return total + distance(c[prev], c[0]);
}

inline std::size_t hamming_distance(const Route& a, const Route& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d += a[i] != b[i];
  return d + (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
}

/// Engine indices [0, N-1) name cities 1..N-1.
inline std::vector<std::uint16_t> map_index_set_to_cities(const IndexSet& set) {
  std::vector<std::uint16_t> out;
  out.reserve(set.size());
  for (auto i : set) out.push_back(static_cast<std::uint16_t>(i + 1));
  return out;
}

inline IndexSet cities_to_index_set(std::span<const std::uint16_t> cities) {
  std::vector<std::uint32_t> idx;
  idx.reserve(cities.size());
  for (auto c : cities) {
    if (c == 0) throw Error(ErrorCode::invalid_route, "the depot cannot be constrained");
    idx.push_back(static_cast<std::uint32_t>(c - 1));
  }
  return IndexSet(std::move(idx));
}

/// Stable repair: cities of S keep their relative order and move to the front.
inline Route constrain(const Route& route, std::span<const std::uint16_t> s_cities) {
  Route out = route;
  std::stable_partition(out.cities.begin(), out.cities.end(), [&](std::uint16_t c) {
    return std::find(s_cities.begin(), s_cities.end(), c) != s_cities.end();
  });
  return out;
}

/// True iff the first |S| positions hold exactly the cities of S.
inline bool satisfies_prefix(const Route& route, std::span<const std::uint16_t> s_cities) {
  if (s_cities.size() > route.size()) return false;
  std::vector<std::uint16_t> head(route.cities.begin(),
                                  route.cities.begin() + static_cast<std::ptrdiff_t>(s_cities.size()));
  std::vector<std::uint16_t> want(s_cities.begin(), s_cities.end());
  std::sort(head.begin(), head.end());
  std::sort(want.begin(), want.end());
  return head == want;
}

// ---------------------------------------------------------------------------
// Substitution neighbourhood

inline constexpr std::size_t max_threshold = 8;

namespace detail {

struct DerangementTable {
  // by_size[m] lists every permutation of 0..m-1 without fixed points;
  // by_size[0] holds the single empty permutation.
  std::array<std::vector<std::vector<std::uint8_t>>, max_threshold + 1> by_size;

  DerangementTable() {
    for (std::size_t m = 0; m <= max_threshold; ++m) {
      std::vector<std::uint8_t> p(m);
      std::iota(p.begin(), p.end(), std::uint8_t{0});
      do {
        bool fixed = false;
        for (std::size_t i = 0; i < m; ++i) fixed = fixed || p[i] == i;
        if (!fixed) by_size[m].push_back(p);
      } while (std::next_permutation(p.begin(), p.end()));
    }
  }
};

inline const DerangementTable& derangements() {
  static const DerangementTable table;
  return table;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

inline std::uint64_t derangement_count(std::size_t m) {
  if (m > max_threshold) throw Error(ErrorCode::config_error, "derangement size too large");
  return detail::derangements().by_size[m].size();
}

/// Number of routes within Hamming distance T of a route of length L whose
/// first K positions form the constrained block. Moves never mix the prefix
/// and the suffix, so each side is deranged independently.
inline std::uint64_t neighborhood_size(std::size_t route_len, std::size_t prefix_len,
                                       std::size_t threshold) {
  const std::size_t t = std::min(threshold, route_len);
  if (t > max_threshold) throw Error(ErrorCode::config_error, "T above supported maximum");
  const std::size_t suffix_len = route_len - prefix_len;
  std::uint64_t total = 0;
  for (std::size_t a = 0; a <= std::min(t, prefix_len); ++a) {
    for (std::size_t b = 0; a + b <= t && b <= suffix_len; ++b) {
      if (a + b < 2) continue;
      total += detail::binomial(prefix_len, a) * derangement_count(a) *
               detail::binomial(suffix_len, b) * derangement_count(b);
    }
  }
  return total;
}

/// Resumable enumeration of the constrained substitution neighbourhood.
///
/// A move picks `a` positions in the prefix and `b` in the suffix
/// (a, b ∉ {1}, 2 <= a+b <= T) and applies a derangement to each group, so
/// exactly a+b positions change. Order: by a+b, then a, then position
/// combinations, then derangements.
class NeighborCursor {
 public:
  NeighborCursor(std::size_t route_len, std::size_t prefix_len, std::size_t threshold)
      : len_(route_len), prefix_(prefix_len), t_(std::min(threshold, route_len)) {
    if (t_ > max_threshold) throw Error(ErrorCode::config_error, "T above supported maximum");
    m_ = 2;
    a_ = 0;
    done_ = t_ < 2 || !settle();
  }

  bool done() const noexcept { return done_; }

  void next() {
    const auto& table = detail::derangements().by_size;
    if (++ib_ < table[b()].size()) return;
    ib_ = 0;
    if (++ia_ < table[a_].size()) return;
    ia_ = 0;
    if (next_combination(comb_b_, prefix_, len_)) return;
    first_combination(comb_b_, prefix_, b());
    if (next_combination(comb_a_, 0, prefix_)) return;
    ++a_;
    done_ = !settle();
  }

  std::uint64_t skip(std::uint64_t n) {
    std::uint64_t moved = 0;
    while (moved < n && !done_) {
      next();
      ++moved;
    }
    return moved;
  }

  std::size_t changed() const noexcept { return comb_a_.size() + comb_b_.size(); }

  /// Writes the changed positions (ascending) and the cities moving into them.
  std::size_t current(const Route& base, std::array<std::uint16_t, max_threshold>& pos,
                      std::array<std::uint16_t, max_threshold>& city) const {
    const auto& table = detail::derangements().by_size;
    const auto& da = table[a_][ia_];
    const auto& db = table[b()][ib_];
    std::size_t k = 0;
    for (std::size_t j = 0; j < comb_a_.size(); ++j, ++k) {
      pos[k] = comb_a_[j];
      city[k] = base[comb_a_[da[j]]];
    }
    for (std::size_t j = 0; j < comb_b_.size(); ++j, ++k) {
      pos[k] = comb_b_[j];
      city[k] = base[comb_b_[db[j]]];
    }
    return k;
  }

  void apply(const Route& base, Route& out) const {
    std::array<std::uint16_t, max_threshold> pos{}, city{};
    const std::size_t k = current(base, pos, city);
    out = base;
    for (std::size_t j = 0; j < k; ++j) out.cities[pos[j]] = city[j];
  }

 private:
  std::size_t b() const noexcept { return m_ - a_; }

  static void first_combination(std::vector<std::uint16_t>& comb, std::size_t lo, std::size_t r) {
    comb.resize(r);
    for (std::size_t i = 0; i < r; ++i) comb[i] = static_cast<std::uint16_t>(lo + i);
  }

  static bool next_combination(std::vector<std::uint16_t>& comb, std::size_t lo, std::size_t hi) {
    (void)lo;
    const std::size_t r = comb.size();
    if (r == 0) return false;
    std::size_t i = r;
    while (i > 0 && comb[i - 1] == hi - r + (i - 1)) --i;
    if (i == 0) return false;
    ++comb[i - 1];
    for (std::size_t j = i; j < r; ++j) comb[j] = static_cast<std::uint16_t>(comb[j - 1] + 1);
    return true;
  }

  bool valid(std::size_t a, std::size_t b) const noexcept {
    return a != 1 && b != 1 && a <= prefix_ && b <= len_ - prefix_;
  }

  bool settle() {
    while (m_ <= t_) {
      while (a_ <= m_) {
        if (valid(a_, b())) {
          first_combination(comb_a_, 0, a_);
          first_combination(comb_b_, prefix_, b());
          ia_ = ib_ = 0;
          return true;
        }
        ++a_;
      }
      ++m_;
      a_ = 0;
    }
    return false;
  }

  std::size_t len_;
  std::size_t prefix_;
  std::size_t t_;
  std::size_t m_ = 2;
  std::size_t a_ = 0;
  std::vector<std::uint16_t> comb_a_;
  std::vector<std::uint16_t> comb_b_;
  std::size_t ia_ = 0;
  std::size_t ib_ = 0;
  bool done_ = false;
};

/// All constrained routes within Hamming distance T (T < 2 yields none).
inline std::vector<Route> substitution_neighbors(const Route& route, std::size_t threshold,
                                                 std::span<const std::uint16_t> s_cities) {
  std::vector<Route> out;
  if (threshold < 2) return out;
  NeighborCursor cursor(route.size(), s_cities.size(), threshold);
  for (; !cursor.done(); cursor.next()) {
    Route r;
    cursor.apply(route, r);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distance matrix and the search adapter

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(const TspInstance& instance) : n_(instance.size()), d_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) d_[i * n_ + j] = distance(instance.cities[i], instance.cities[j]);
    }
  }

  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
  std::size_t size() const noexcept { return n_; }

  /// Same summation order as route_length(instance, route); no validity check.
  double tour(const Route& route) const noexcept {
    double total = 0.0;
    std::uint16_t prev = 0;
    for (auto city : route.cities) {
      total += (*this)(prev, city);
      prev = city;
    }
    return total + (*this)(prev, 0);
  }

  /// Length change when the given positions receive the given cities.
  double delta(const Route& base, std::span<const std::uint16_t> pos,
               std::span<const std::uint16_t> city) const noexcept {
    const std::size_t len = base.size();
    auto old_at = [&](std::size_t tour_idx) -> std::uint16_t {
      return (tour_idx == 0 || tour_idx == len + 1) ? 0 : base[tour_idx - 1];
    };
    auto new_at = [&](std::size_t tour_idx) -> std::uint16_t {
      if (tour_idx == 0 || tour_idx == len + 1) return 0;
      for (std::size_t j = 0; j < pos.size(); ++j) {
        if (pos[j] + 1u == tour_idx) return city[j];
      }
      return base[tour_idx - 1];
    };
    double before = 0.0;
    double after = 0.0;
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const std::size_t p = pos[j];
      // Edge e joins tour slots e and e+1; position p sits in slot p+1.
      if (j == 0 || pos[j - 1] + 1u != p) {
        before += (*this)(old_at(p), old_at(p + 1));
        after += (*this)(new_at(p), new_at(p + 1));
      }
      before += (*this)(old_at(p + 1), old_at(p + 2));
      after += (*this)(new_at(p + 1), new_at(p + 2));
    }
    return after - before;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// Canonical instance JSON: {"name": ..., "cities": [[x, y], ...]}.
inline nlohmann::json instance_to_json(const TspInstance& instance) {
  nlohmann::json cities = nlohmann::json::array();
  for (const auto& c : instance.cities) cities.push_back({c.x, c.y});
  return nlohmann::json{{"name", instance.name}, {"cities", cities}};
}

inline TspInstance instance_from_json(const nlohmann::json& j) {
  try {
    TspInstance inst;
    inst.name = j.at("name").get<std::string>();
    for (const auto& c : j.at("cities")) {
      if (!c.is_array() || c.size() != 2) throw Error(ErrorCode::parse_error, "city must be [x, y]");
      inst.cities.push_back(City{c.at(0).get<double>(), c.at(1).get<double>()});
    }
    inst.check();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("instance: ") + e.what());
  }
}

inline Hash256 instance_digest(const TspInstance& instance) {
  return sha256(as_bytes(instance_to_json(instance).dump()));
}

/// Coordinates uniform in [0, 100]² from a 64-bit seed.
inline TspInstance generate_instance(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::config_error, "instance needs at least 2 cities");
  Rng rng(seed);
  TspInstance inst;
  inst.name = "tsp-n" + std::to_string(n) + "-seed" + std::to_string(seed);
  inst.cities.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 100.0 * uniform_unit(rng);
    const double y = 100.0 * uniform_unit(rng);
    inst.cities.push_back(City{x, y});
  }
  return inst;
}

/// TSP as a BLM search problem.
///
/// Dimension is N-1 (one per non-depot city). An index set S requires the
/// route to visit the cities of S first; neighbours are the constrained
/// routes within substitution (Hamming) distance T.
class TspProblem {
 public:
  using State = Route;
  using Cursor = NeighborCursor;
  static constexpr bool adaptive_steps = false;

  explicit TspProblem(TspInstance instance, std::size_t threshold = 5)
      : instance_(std::move(instance)), t_(threshold) {
    instance_.check();
    if (t_ < 2 || t_ > max_threshold) {
      throw Error(ErrorCode::config_error, "T must lie in [2, " + std::to_string(max_threshold) + "]");
    }
    dist_ = DistanceMatrix(instance_);
    digest_ = instance_digest(instance_);
  }

  const TspInstance& instance() const noexcept { return instance_; }
  const DistanceMatrix& distances() const noexcept { return dist_; }
  std::size_t threshold() const noexcept { return t_; }
  std::size_t dimension() const noexcept { return instance_.size() - 1; }

  double objective(const Route& r) const noexcept { return dist_.tour(r); }

  Route random_state(Rng& rng) const {
    Route r;
    r.cities.resize(dimension());
    std::iota(r.cities.begin(), r.cities.end(), std::uint16_t{1});
    shuffle(r.cities, rng);
    return r;
  }

  Route constrain(const Route& r, const IndexSet& set) const {
    require_valid(r, instance_.size());
    const auto cities = map_index_set_to_cities(set);
    return tsp::constrain(r, cities);
  }

  bool satisfies(const Route& r, const IndexSet& set) const {
    if (!is_valid_route(r, instance_.size())) return false;
    const auto cities = map_index_set_to_cities(set);
    return satisfies_prefix(r, cities);
  }

  std::uint64_t neighborhood_size(const Route& r, const IndexSet& set) const {
    return tsp::neighborhood_size(r.size(), set.size(), t_);
  }

  NeighborCursor cursor(const Route& r, const IndexSet& set) const {
    return NeighborCursor(r.size(), set.size(), t_);
  }

  /// Scans forward from `cursor` for a neighbour meeting `acc` against `bound`.
  /// A cheap edge delta screens candidates; hits are confirmed with the full
  /// fixed-order length so comparisons match objective() exactly.
  ScanResult<Route> scan(NeighborCursor& cursor, const Route& center, double bound, Acceptance acc,
                         std::uint64_t max_examined) const {
    ScanResult<Route> out;
    std::array<std::uint16_t, max_threshold> pos{}, city{};
    const double slack = 1e-9 * (1.0 + std::abs(bound));
    const double center_len = dist_.tour(center);
    Route trial;
    while (!cursor.done() && out.examined < max_examined) {
      const std::size_t k = cursor.current(center, pos, city);
      ++out.examined;
      const double d = dist_.delta(center, std::span(pos.data(), k), std::span(city.data(), k));
      if (center_len + d <= bound + slack) {
        cursor.apply(center, trial);
        const double v = dist_.tour(trial);
        if (v < bound || (acc == Acceptance::at_most && v == bound)) {
          out.hit = std::move(trial);
          out.value = v;
          cursor.next();
          out.finished = cursor.done();
          return out;
        }
      }
      cursor.next();
    }
    out.finished = cursor.done();
    return out;
  }

  std::optional<Route> propose(const Route& r, const IndexSet& set, Rng& rng, double) const {
    return sample_neighbor(r, set, rng);
  }

  /// Random constrained neighbour: pick 2..T positions, drop a lone position
  /// on either side of the prefix boundary, derange each side.
  std::optional<Route> sample_neighbor(const Route& r, const IndexSet& set, Rng& rng) const {
    const std::size_t len = r.size();
    const std::size_t prefix = set.size();
    const std::size_t t = std::min(t_, len);
    if (t < 2 || (prefix < 2 && len - prefix < 2)) return std::nullopt;
    std::vector<std::uint16_t> order(len);
    std::iota(order.begin(), order.end(), std::uint16_t{0});
    std::vector<std::uint16_t> side_a, side_b;
    for (;;) {
      const std::size_t m = 2 + uniform_index(rng, t - 1);
      for (std::size_t i = 0; i < m; ++i) {
        std::swap(order[i], order[i + uniform_index(rng, len - i)]);
      }
      side_a.clear();
      side_b.clear();
      for (std::size_t i = 0; i < m; ++i) (order[i] < prefix ? side_a : side_b).push_back(order[i]);
      if (side_a.size() == 1) side_a.clear();
      if (side_b.size() == 1) side_b.clear();
      if (side_a.size() + side_b.size() >= 2) break;
    }
    Route out = r;
    derange_into(r, side_a, out, rng);
    derange_into(r, side_b, out, rng);
    return out;
  }

  Route canonical(const Route& r, const IndexSet&) const { return r; }

  bool is_neighbor(const Route& center, const Route& candidate, const IndexSet& set) const {
    if (!satisfies(candidate, set) || !satisfies(center, set)) return false;
    const std::size_t d = hamming_distance(center, candidate);
    return d >= 1 && d <= t_;
  }

  Bytes encode(const Route& r) const {
    Bytes out;
    out.reserve(2 * r.size());
    for (auto c : r.cities) append_le(out, c);
    return out;
  }

  Route decode(ByteView bytes) const {
    if (bytes.size() % 2 != 0) throw Error(ErrorCode::encoding_error, "odd TSP encoding length");
    Route r;
    r.cities.reserve(bytes.size() / 2);
    for (std::size_t i = 0; i < bytes.size(); i += 2) {
      r.cities.push_back(static_cast<std::uint16_t>(bytes[i] | (bytes[i + 1] << 8)));
    }
    if (!is_valid_route(r, instance_.size())) {
      throw Error(ErrorCode::encoding_error, "decoded route is not a permutation");
    }
    return r;
  }

  nlohmann::json describe() const {
    return nlohmann::json{{"kind", "tsp"},
                          {"cities", instance_.size()},
                          {"t", t_},
                          {"instance_sha256", to_hex(digest_)}};
  }

 private:
  static void derange_into(const Route& base, const std::vector<std::uint16_t>& positions,
                           Route& out, Rng& rng) {
    if (positions.size() < 2) return;
    std::vector<std::uint16_t> perm(positions.size());
    bool fixed = true;
    while (fixed) {
      std::iota(perm.begin(), perm.end(), std::uint16_t{0});
      shuffle(perm, rng);
      fixed = false;
      for (std::size_t i = 0; i < perm.size(); ++i) fixed = fixed || perm[i] == i;
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
      out.cities[positions[i]] = base[positions[perm[i]]];
    }
  }

  TspInstance instance_;
  std::size_t t_;
  DistanceMatrix dist_;
  Hash256 digest_;
};

// ---------------------------------------------------------------------------
// Local search, BLM check, exact solvers, post-optimisation

inline constexpr std::uint64_t default_exhaustive_cap = 2'000'000;

/// First-improvement search under the prefix constraint; stops at a route
/// with no strictly shorter constrained neighbour.
inline Route local_search(const TspInstance& instance, std::span<const std::uint16_t> s_cities,
                          std::size_t threshold, const Route& start, std::uint64_t budget, Rng& rng,
                          SearchPolicy policy = {}) {
  TspProblem problem(instance, threshold);
  require_valid(start, instance.size());
  if (!satisfies_prefix(start, s_cities)) {
    throw Error(ErrorCode::invalid_route, "start route violates the prefix constraint");
  }
  policy.restart_on_tie = false;
  BlmSearch<TspProblem> search(problem, cities_to_index_set(s_cities), start, Rng(rng()), policy);
  search.advance(budget);
  if (!search.certified()) throw Error(ErrorCode::exhausted, "local search budget consumed");
  return search.state();
}

/// Exhaustive BLM test: no constrained neighbour may be as short or shorter.
inline bool is_blm(const TspInstance& instance, const Route& route,
                   std::span<const std::uint16_t> s_cities, std::size_t threshold,
                   std::uint64_t cap = default_exhaustive_cap) {
  require_valid(route, instance.size());
  if (!satisfies_prefix(route, s_cities)) {
    throw Error(ErrorCode::invalid_route, "route violates the prefix constraint");
  }
  const std::uint64_t total = neighborhood_size(route.size(), s_cities.size(), threshold);
  if (total > cap) {
    throw Error(ErrorCode::neighborhood_too_large,
                std::to_string(total) + " neighbours exceed cap " + std::to_string(cap));
  }
  if (threshold < 2) return true;
  DistanceMatrix dist(instance);
  const double len = dist.tour(route);
  NeighborCursor cursor(route.size(), s_cities.size(), threshold);
  Route trial;
  std::array<std::uint16_t, max_threshold> pos{}, city{};
  for (; !cursor.done(); cursor.next()) {
    const std::size_t k = cursor.current(route, pos, city);
    const double d = dist.delta(route, std::span(pos.data(), k), std::span(city.data(), k));
    if (d <= 1e-9 * (1.0 + len)) {
      cursor.apply(route, trial);
      if (dist.tour(trial) <= len) return false;
    }
  }
  return true;
}

struct Tour {
  Route route;
  double length = 0.0;
};

namespace detail {
// Reversal gives the same tour; report the orientation with θ₁ < θ_{N-1}.
inline Route orient(Route r) {
  if (r.size() >= 2 && r.cities.front() > r.cities.back()) std::reverse(r.cities.begin(), r.cities.end());
  return r;
}
}  // namespace detail

inline constexpr std::size_t default_held_karp_cap = 18;

/// Exact tour by dynamic programming over subsets of non-depot cities.
inline Tour held_karp(const TspInstance& instance, std::size_t cap = default_held_karp_cap) {
  instance.check();
  const std::size_t n = instance.size();
  if (n > cap) {
    throw Error(ErrorCode::instance_too_large,
                "held_karp limited to " + std::to_string(cap) + " cities, got " + std::to_string(n));
  }
  const DistanceMatrix dist(instance);
  const std::size_t m = n - 1;
  if (m == 1) {
    Route r{{1}};
    return Tour{r, dist.tour(r)};
  }
  const std::size_t states = std::size_t{1} << m;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(states * m, inf);
  std::vector<std::uint8_t> parent(states * m, 0xff);
  for (std::size_t j = 0; j < m; ++j) cost[(std::size_t{1} << j) * m + j] = dist(0, j + 1);
  for (std::size_t mask = 1; mask < states; ++mask) {
    for (std::size_t j = 0; j < m; ++j) {
      const double here = cost[mask * m + j];
      if (!(mask >> j & 1) || here == inf) continue;
      for (std::size_t k = 0; k < m; ++k) {
        if (mask >> k & 1) continue;
        const std::size_t next = mask | (std::size_t{1} << k);
        const double cand = here + dist(j + 1, k + 1);
        if (cand < cost[next * m + k]) {
          cost[next * m + k] = cand;
          parent[next * m + k] = static_cast<std::uint8_t>(j);
        }
      }
    }
  }
  const std::size_t full = states - 1;
  std::size_t last = 0;
  double best = inf;
  for (std::size_t j = 0; j < m; ++j) {
    const double c = cost[full * m + j] + dist(j + 1, 0);
    if (c < best) {
      best = c;
      last = j;
    }
  }
  Route r;
  r.cities.resize(m);
  std::size_t mask = full;
  std::size_t j = last;
  for (std::size_t slot = m; slot-- > 0;) {
    r.cities[slot] = static_cast<std::uint16_t>(j + 1);
    const std::size_t pj = parent[mask * m + j];
    mask &= ~(std::size_t{1} << j);
    j = pj;
  }
  r = detail::orient(std::move(r));
  return Tour{r, dist.tour(r)};
}

inline constexpr std::size_t brute_force_cap = 12;

/// Exhaustive scan of all tours (each undirected tour visited once).
inline Tour brute_force_tsp(const TspInstance& instance) {
  instance.check();
  const std::size_t n = instance.size();
  if (n > brute_force_cap) {
    throw Error(ErrorCode::instance_too_large, "brute force limited to 11 cities");
  }
  const DistanceMatrix dist(instance);
  Route r;
  r.cities.resize(n - 1);
  std::iota(r.cities.begin(), r.cities.end(), std::uint16_t{1});
  Tour best{r, std::numeric_limits<double>::infinity()};
  do {
    if (r.size() >= 2 && r.cities.front() > r.cities.back()) continue;
    const double len = dist.tour(r);
    if (len < best.length) best = Tour{r, len};
  } while (std::next_permutation(r.cities.begin(), r.cities.end()));
  return best;
}

/// Best-improvement descent over the unconstrained Hamming-≤T neighbourhood.
inline Route post_optimize(const TspInstance& instance, const Route& route, std::size_t threshold,
                           std::size_t max_rounds = 1000) {
  require_valid(route, instance.size());
  if (threshold < 2) return route;
  const DistanceMatrix dist(instance);
  Route current = route;
  double len = dist.tour(current);
  std::array<std::uint16_t, max_threshold> pos{}, city{};
  Route trial;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    NeighborCursor cursor(current.size(), 0, threshold);
    double best_delta = 0.0;
    std::optional<NeighborCursor> best;
    for (; !cursor.done(); cursor.next()) {
      const std::size_t k = cursor.current(current, pos, city);
      const double d = dist.delta(current, std::span(pos.data(), k), std::span(city.data(), k));
      if (d < best_delta) {
        best_delta = d;
        best = cursor;
      }
    }
    if (!best) break;
    best->apply(current, trial);
    const double v = dist.tour(trial);
    if (!(v < len)) break;
    current = trial;
    len = v;
  }
  return current;
}

}  // namespace blmchain::tsp
