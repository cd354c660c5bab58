#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "blmchain/blmchain.hpp"
#include "helpers.hpp"

using namespace blmchain;
using namespace blmchain::tsp;

namespace {

Route identity_route(std::size_t len) {
  Route r;
  for (std::size_t i = 1; i <= len; ++i) r.cities.push_back(static_cast<std::uint16_t>(i));
  return r;
}

// Brute-force oracle: every permutation of `route` within Hamming distance T
// whose first |S| positions hold exactly the cities in S.
std::set<std::vector<std::uint16_t>> oracle_neighbors(const Route& route, std::size_t t,
                                                      std::span<const std::uint16_t> s_cities) {
  std::set<std::vector<std::uint16_t>> out;
  auto perm = route.cities;
  std::sort(perm.begin(), perm.end());
  do {
    Route r{perm};
    const auto d = hamming_distance(r, route);
    if (d >= 1 && d <= t && satisfies_prefix(r, s_cities)) out.insert(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

double brute_force_length(const TspInstance& instance) { return brute_force_tsp(instance).length; }

}  // namespace

TEST(Route, ValidityAndLength) {
  const auto sq = testing_support::unit_square();
  EXPECT_TRUE(is_valid_route(Route{{1, 2, 3}}, 4));
  EXPECT_FALSE(is_valid_route(Route{{1, 2, 2}}, 4));
  EXPECT_FALSE(is_valid_route(Route{{0, 1, 2}}, 4));
  EXPECT_FALSE(is_valid_route(Route{{1, 2}}, 4));
  EXPECT_DOUBLE_EQ(route_length(sq, Route{{1, 2, 3}}), 4.0);
  EXPECT_DOUBLE_EQ(route_length(sq, Route{{2, 1, 3}}), 2.0 + 2.0 * std::sqrt(2.0));
  EXPECT_THROW(route_length(sq, Route{{1, 1, 3}}), Error);
}

TEST(Route, HammingFloorIsTwo) {
  for (std::size_t n = 3; n <= 6; ++n) {
    std::vector<Route> all;
    auto perm = identity_route(n - 1).cities;
    do all.push_back(Route{perm});
    while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) ASSERT_NE(hamming_distance(all[i], all[j]), 1u);
    }
  }
}

TEST(Constraint, StableRepairExample) {
  const std::vector<std::uint16_t> s{2};
  EXPECT_EQ(constrain(Route{{3, 1, 2}}, s), (Route{{2, 3, 1}}));
}

TEST(Constraint, IdempotentAndSatisfying) {
  Rng rng(3);
  TspProblem problem(generate_instance(15, 3), 4);
  for (int i = 0; i < 500; ++i) {
    const auto set = index_select(sha256(as_bytes(std::to_string(i))), 14, 1 + i % 14);
    const auto r = problem.constrain(problem.random_state(rng), set);
    EXPECT_TRUE(problem.satisfies(r, set));
    EXPECT_EQ(problem.constrain(r, set), r);
  }
}

TEST(Constraint, IndexSetMapsToCities) {
  const IndexSet set({0, 4, 7});
  EXPECT_EQ(map_index_set_to_cities(set), (std::vector<std::uint16_t>{1, 5, 8}));
  EXPECT_EQ(cities_to_index_set(map_index_set_to_cities(set)), set);
}

TEST(Neighborhood, UnconstrainedCountForTwentyFiveCities) {
  EXPECT_EQ(neighborhood_size(24, 0, 5), 1'970'134u);
  EXPECT_EQ(neighborhood_size(24, 24, 5), 1'970'134u);
}

TEST(Neighborhood, DerangementNumbers) {
  const std::vector<std::uint64_t> d{1, 0, 1, 2, 9, 44, 265, 1854, 14833};
  for (std::size_t m = 0; m < d.size(); ++m) EXPECT_EQ(derangement_count(m), d[m]);
}

TEST(Neighborhood, MatchesBruteForceOracle) {
  for (std::size_t len = 1; len <= 7; ++len) {
    for (std::size_t prefix = 0; prefix <= len; ++prefix) {
      for (std::size_t t = 0; t <= len + 1 && t <= max_threshold; ++t) {
        Route base = identity_route(len);
        std::reverse(base.cities.begin(), base.cities.end());
        const std::vector<std::uint16_t> s(base.cities.begin(), base.cities.begin() + prefix);
        const auto expected = oracle_neighbors(base, t, s);
        const auto listed = substitution_neighbors(base, t, s);
        std::set<std::vector<std::uint16_t>> got;
        for (const auto& r : listed) got.insert(r.cities);
        ASSERT_EQ(got.size(), listed.size()) << "duplicates at L=" << len << " K=" << prefix << " T=" << t;
        ASSERT_EQ(got, expected) << "L=" << len << " K=" << prefix << " T=" << t;
        ASSERT_EQ(neighborhood_size(len, prefix, t), expected.size());
      }
    }
  }
}

TEST(Neighborhood, SymmetricInPrefixLength) {
  for (std::size_t len = 2; len <= 30; ++len) {
    for (std::size_t k = 0; k <= len; ++k) EXPECT_EQ(neighborhood_size(len, k, 5), neighborhood_size(len, len - k, 5));
  }
}

TEST(Neighborhood, CursorSkipMatchesStepping) {
  NeighborCursor a(9, 4, 4), b(9, 4, 4);
  const Route base = identity_route(9);
  Route ra, rb;
  for (std::uint64_t step : {1u, 7u, 100u, 3u, 1000u}) {
    for (std::uint64_t i = 0; i < step && !a.done(); ++i) a.next();
    b.skip(step);
    ASSERT_EQ(a.done(), b.done());
    if (a.done()) break;
    a.apply(base, ra);
    b.apply(base, rb);
    ASSERT_EQ(ra, rb);
  }
  NeighborCursor c(9, 4, 4);
  EXPECT_EQ(c.skip(1u << 30), neighborhood_size(9, 4, 4));
  EXPECT_TRUE(c.done());
}

TEST(Neighborhood, DeltaMatchesFullRecomputation) {
  const auto instance = generate_instance(12, 8);
  const DistanceMatrix dist(instance);
  Rng rng(1);
  TspProblem problem(instance, 5);
  const Route base = problem.random_state(rng);
  const double len = dist.tour(base);
  NeighborCursor cursor(base.size(), 5, 5);
  std::array<std::uint16_t, max_threshold> pos{}, city{};
  Route trial;
  std::uint64_t n = 0;
  for (; !cursor.done(); cursor.next(), ++n) {
    const std::size_t k = cursor.current(base, pos, city);
    cursor.apply(base, trial);
    ASSERT_NEAR(dist.delta(base, std::span(pos.data(), k), std::span(city.data(), k)), dist.tour(trial) - len, 1e-9);
  }
  EXPECT_EQ(n, neighborhood_size(11, 5, 5));
}

TEST(Neighborhood, SampledNeighboursAreNeighbours) {
  TspProblem problem(generate_instance(20, 1), 5);
  Rng rng(2);
  const IndexSet set({0, 3, 5, 9, 11, 12, 18});
  const auto base = problem.constrain(problem.random_state(rng), set);
  for (int i = 0; i < 5000; ++i) {
    const auto n = problem.sample_neighbor(base, set, rng);
    ASSERT_TRUE(n);
    ASSERT_TRUE(problem.is_neighbor(base, *n, set));
    ASSERT_LE(hamming_distance(base, *n), 5u);
  }
}

TEST(Encoding, RoundTripAndStrictDecode) {
  TspProblem problem(generate_instance(7, 2), 3);
  const Route r{{3, 1, 6, 2, 5, 4}};
  const auto bytes = problem.encode(r);
  ASSERT_EQ(bytes.size(), 12u);
  EXPECT_EQ(bytes[0], 3);
  EXPECT_EQ(bytes[1], 0);
  EXPECT_EQ(problem.decode(bytes), r);
  auto bad = bytes;
  bad[2] = 3;  // duplicate city
  EXPECT_THROW(problem.decode(bad), Error);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(problem.decode(bad), Error);
}

TEST(Instance, JsonRoundTripAndDigest) {
  const auto a = generate_instance(10, 42);
  const auto b = instance_from_json(instance_to_json(a));
  EXPECT_EQ(instance_digest(a), instance_digest(b));
  EXPECT_EQ(route_length(a, identity_route(9)), route_length(b, identity_route(9)));
  EXPECT_NE(instance_digest(a), instance_digest(generate_instance(10, 43)));
  for (const auto& c : a.cities) {
    EXPECT_GE(c.x, 0.0);
    EXPECT_LE(c.x, 100.0);
  }
}

TEST(HeldKarp, SquareExample) {
  const auto t = held_karp(testing_support::unit_square());
  EXPECT_DOUBLE_EQ(t.length, 4.0);
  EXPECT_EQ(t.route, (Route{{1, 2, 3}}));
}

TEST(HeldKarp, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    for (std::size_t n : {2u, 3u, 5u, 8u, 10u}) {
      const auto instance = generate_instance(n, seed * 31 + n);
      const auto t = held_karp(instance);
      EXPECT_NEAR(t.length, brute_force_length(instance), 1e-9);
      EXPECT_NEAR(route_length(instance, t.route), t.length, 1e-9);
      if (t.route.size() >= 2) {
        EXPECT_LT(t.route.cities.front(), t.route.cities.back());
      }
    }
  }
}

TEST(HeldKarp, RejectsAboveCap) {
  EXPECT_THROW(held_karp(generate_instance(19, 1)), Error);
}

TEST(LocalSearch, SquareAndBlmResult) {
  const auto sq = testing_support::unit_square();
  Rng rng(1);
  const std::vector<std::uint16_t> s{1};
  const auto r = local_search(sq, s, 3, Route{{1, 3, 2}}, 1000, rng);
  EXPECT_DOUBLE_EQ(route_length(sq, r), 4.0);

  const auto instance = generate_instance(10, 5);
  const std::vector<std::uint16_t> s2{4, 7, 2};
  for (int i = 0; i < 10; ++i) {
    TspProblem problem(instance, 4);
    const auto start = constrain(problem.random_state(rng), s2);
    const auto out = local_search(instance, s2, 4, start, 10'000'000, rng);
    EXPECT_TRUE(is_blm(instance, out, s2, 4));
    EXPECT_LE(route_length(instance, out), route_length(instance, start));
  }
}

TEST(LocalSearch, RejectsUnconstrainedStart) {
  Rng rng(1);
  const std::vector<std::uint16_t> s{3};
  EXPECT_THROW(local_search(testing_support::unit_square(), s, 3, Route{{1, 2, 3}}, 100, rng), Error);
}

TEST(IsBlm, OptimalTourIsBlmAndTooLargeThrows) {
  const auto instance = generate_instance(9, 6);
  const auto best = held_karp(instance);
  for (std::size_t t = 2; t <= 5; ++t) EXPECT_TRUE(is_blm(instance, best.route, std::span<const std::uint16_t>{}, t));
  const auto big = generate_instance(40, 1);
  EXPECT_THROW(is_blm(big, identity_route(39), std::span<const std::uint16_t>{}, 5), Error);
}

TEST(PostOptimize, NeverWorsensAndReachesLocalOptimum) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto instance = generate_instance(12, seed);
    Rng rng(seed);
    TspProblem problem(instance, 3);
    const auto start = problem.random_state(rng);
    const auto out = post_optimize(instance, start, 3);
    EXPECT_LE(route_length(instance, out), route_length(instance, start));
    EXPECT_TRUE(is_blm(instance, out, std::span<const std::uint16_t>{}, 3) ||
                route_length(instance, out) == held_karp(instance).length);
  }
}
