#include <gtest/gtest.h>

#include "blmchain/blmchain.hpp"
#include "demo_oracle.hpp"

using namespace blmchain;
using namespace blmchain::continuous;

namespace {

double demo_sum(std::span<const double> x) { return evaluate(Objective::demo, x); }

ContinuousCheck check_demo(double theta, double delta, std::uint64_t samples, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<double> d{delta};
  return blm_check_continuous(demo_sum, ContinuousState{theta}, IndexSet({0}), d, samples, rng,
                              demo_oracle::lower, demo_oracle::upper);
}

double ripple_minimum() {
  for (double x : demo_oracle::local_minima()) {
    if (x > 0.7 && x < 1.0) return x;
  }
  return 0.0;
}

}  // namespace

TEST(Demo, ClosedFormValues) {
  EXPECT_EQ(f_demo(0.0), 0.0);
  EXPECT_NEAR(f_demo(std::numbers::pi), 0.0, 1e-15);
  EXPECT_NEAR(f_demo(std::numbers::pi / 2), 1.0, 1e-15);
}

TEST(SigFigs, PublishedRoundings) {
  EXPECT_EQ(sig_fig_string(3215.43, 2), "3.2e3");
  EXPECT_EQ(sig_fig_string(3215.43, 6), "3215.43");
  EXPECT_EQ(sig_fig_string(0.0, 5), "0");
}

TEST(SigFigs, HalfAwayFromZero) {
  EXPECT_EQ(sig_fig_round(2.5, 1), 3.0);
  EXPECT_EQ(sig_fig_round(-2.5, 1), -3.0);
  EXPECT_EQ(sig_fig_round(0.125, 2), 0.13);
  EXPECT_EQ(sig_fig_round(9.96, 2), 10.0);
  EXPECT_EQ(sig_fig_round(-0.000123456, 3), -0.000123);
  EXPECT_THROW(sig_fig_round(1.0, 0), Error);
}

TEST(SigFigs, RoundingIsAProjection) {
  Rng rng(1);
  for (int i = 0; i < 20'000; ++i) {
    const double x = std::ldexp(2.0 * uniform_unit(rng) - 1.0, static_cast<int>(uniform_index(rng, 80)) - 40);
    const int k = 1 + static_cast<int>(uniform_index(rng, 15));
    const double r = sig_fig_round(x, k);
    ASSERT_EQ(sig_fig_round(r, k), r) << x << " at " << k;
  }
}

TEST(Canonical, FormatExamples) {
  EXPECT_EQ(format_canonical(5.0), "5");
  EXPECT_EQ(format_canonical(10.0), "1e1");
  EXPECT_EQ(format_canonical(3200.0), "3.2e3");
  EXPECT_EQ(format_canonical(3215.43), "3215.43");
  EXPECT_EQ(format_canonical(0.5), "0.5");
  EXPECT_EQ(format_canonical(-0.00012), "-1.2e-4");
  EXPECT_EQ(format_canonical(0.0012), "0.0012");
  EXPECT_EQ(format_canonical(-0.0), "0");
  EXPECT_THROW(format_canonical(std::nan("")), Error);
}

TEST(Canonical, StrictParse) {
  EXPECT_EQ(parse_canonical("3.2e3"), 3200.0);
  EXPECT_EQ(parse_canonical("-1.2e-4"), -0.00012);
  for (const char* bad : {"", "3200", "+1", "1.", "1.0", "01", "1E1", "1e+1", " 1", "0x1", "inf", "nan", "-0"}) {
    EXPECT_FALSE(parse_canonical(bad)) << bad;
  }
}

TEST(Canonical, RoundTripFuzz) {
  Rng rng(2);
  for (int i = 0; i < 50'000; ++i) {
    double x;
    if (i % 2) {
      x = std::ldexp(2.0 * uniform_unit(rng) - 1.0, static_cast<int>(uniform_index(rng, 200)) - 100);
    } else {
      x = sig_fig_round(1e6 * (2.0 * uniform_unit(rng) - 1.0), 1 + static_cast<int>(uniform_index(rng, 15)));
    }
    const auto text = format_canonical(x);
    const auto back = parse_canonical(text);
    ASSERT_TRUE(back) << text;
    ASSERT_EQ(*back, x == 0.0 ? 0.0 : x) << text;
  }
}

TEST(Delta, PublishedRule) {
  for (double theta : {1.0, -3.5, 3215.43}) {
    EXPECT_DOUBLE_EQ(delta_rule(2, 100, theta), 0.02 * std::abs(theta));
    EXPECT_DOUBLE_EQ(delta_rule(6, 100, theta), 0.06 * std::abs(theta));
  }
  EXPECT_EQ(delta_rule(3, 100, 0.0), 1e-6);
  EXPECT_EQ(delta_rule(3, 100, 0.0, 0.25), 0.25);
}

TEST(Delta, MonotoneInK) {
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const double theta = 10.0 * (2.0 * uniform_unit(rng) - 1.0);
    const std::size_t n = 1 + uniform_index(rng, 200);
    const std::size_t k = 1 + uniform_index(rng, n);
    if (k < n) EXPECT_LE(delta_rule(k, n, theta), delta_rule(k + 1, n, theta));
  }
}

TEST(BlmCheck, GlobalBasinBottomIsAccepted) {
  const double x = demo_oracle::global_minimum();
  const demo_oracle::Grid grid;
  ASSERT_TRUE(grid.accepts(x, 0.5));
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_TRUE(check_demo(x, 0.5, 10'000, s).accepted);
}

TEST(BlmCheck, RippleMinimumDependsOnWindow) {
  const double x = ripple_minimum();
  ASSERT_GT(x, 0.0);
  const demo_oracle::Grid grid;
  EXPECT_FALSE(grid.accepts(x, 0.5));
  EXPECT_TRUE(grid.accepts(x, 0.05));
  const auto wide = check_demo(x, 0.5, 10'000, 1);
  ASSERT_FALSE(wide.accepted);
  EXPECT_LE(demo_sum(*wide.counterexample), f_demo(x));
  EXPECT_LT(std::abs((*wide.counterexample)[0] - x), 0.5);
  EXPECT_TRUE(check_demo(x, 0.05, 10'000, 1).accepted);
}

TEST(BlmCheck, FrozenCoordinatesStayPut) {
  Rng rng(4);
  const ContinuousState theta{1.0, 2.0, 3.0};
  const std::vector<double> d{0.1, 0.1, 0.1};
  auto increasing = [](std::span<const double> x) { return -(x[0] + x[1] + x[2]); };
  const auto r = blm_check_continuous(increasing, theta, IndexSet({1}), d, 1000, rng);
  ASSERT_FALSE(r.accepted);
  EXPECT_EQ((*r.counterexample)[0], 1.0);
  EXPECT_EQ((*r.counterexample)[2], 3.0);
  EXPECT_THROW(blm_check_continuous(increasing, theta, IndexSet({1}), d, 0, rng), Error);
}

TEST(Problem, LatticeAndEncoding) {
  ContinuousSpec spec;
  spec.dimension = 3;
  ContinuousProblem problem(spec);
  const IndexSet set({0, 2});
  EXPECT_EQ(problem.sig_figs(2), 2);
  const auto s = problem.constrain({1.234, 2.345, 3.456}, set);
  EXPECT_EQ(s, (ContinuousState{1.2, 2.345, 3.5}));
  EXPECT_TRUE(problem.satisfies(s, set));
  EXPECT_FALSE(problem.satisfies({1.23, 2.345, 3.5}, set));
  const auto bytes = problem.encode(s);
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "1.2,2.345,3.5");
  EXPECT_EQ(problem.decode(bytes), s);
  for (const char* bad : {"1.2,2.345", "1.2,2.345,3.50", "1.2,,3.5", "1.2,2.345,3.5,"}) {
    const std::string text(bad);
    EXPECT_THROW(problem.decode(Bytes(text.begin(), text.end())), Error) << bad;
  }
}

TEST(Problem, SampledNeighboursRespectTheWindow) {
  ContinuousSpec spec;
  spec.dimension = 4;
  spec.sig_figs_min = 6;
  ContinuousProblem problem(spec);
  const IndexSet set({1, 3});
  Rng rng(5);
  const auto center = problem.constrain(problem.random_state(rng), set);
  for (int i = 0; i < 5000; ++i) {
    const auto n = problem.sample_neighbor(center, set, rng);
    ASSERT_TRUE(n);
    ASSERT_TRUE(problem.is_neighbor(center, *n, set));
    ASSERT_EQ((*n)[0], center[0]);
    ASSERT_EQ((*n)[2], center[2]);
  }
}

TEST(Problem, SpecJsonRoundTrip) {
  ContinuousSpec spec;
  spec.objective = Objective::sphere;
  spec.dimension = 7;
  spec.lower = -2;
  spec.upper = 3;
  spec.sig_figs_offset = 2;
  spec.delta.kind = DeltaRule::Kind::absolute;
  spec.delta.absolute = 0.25;
  const auto back = spec_from_json(spec_to_json(spec));
  EXPECT_EQ(spec_to_json(back), spec_to_json(spec));
  auto j = spec_to_json(spec);
  j["objective"] = "rosenbrock";
  EXPECT_THROW(spec_from_json(j), Error);
}

TEST(Descent, DemoFromOneNeverWorsens) {
  ContinuousSpec spec;
  spec.delta.kind = DeltaRule::Kind::absolute;
  spec.delta.absolute = 0.5;
  ContinuousProblem problem(spec);
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(s);
    const auto out = coordinate_descent(problem, {1.0}, IndexSet({0}), 1'000'000, rng);
    EXPECT_LE(f_demo(out[0]), f_demo(1.0));
  }
}

TEST(Descent, SphereFreezesOutOfScopeCoordinates) {
  ContinuousSpec spec;
  spec.objective = Objective::sphere;
  spec.dimension = 5;
  spec.lower = -5;
  spec.upper = 5;
  ContinuousProblem problem(spec);
  const IndexSet set({1, 3});
  const ContinuousState start{1.5, -2.0, 3.25, 4.0, -0.75};
  Rng rng(6);
  const auto out = coordinate_descent(problem, start, set, 5'000'000, rng);
  EXPECT_EQ(out[0], start[0]);
  EXPECT_EQ(out[2], start[2]);
  EXPECT_EQ(out[4], start[4]);
  EXPECT_LT(std::abs(out[1]), 1e-4);
  EXPECT_LT(std::abs(out[3]), 1e-4);
  EXPECT_THROW(coordinate_descent(problem, start, IndexSet{}, 100, rng), Error);
}

TEST(Descent, MinedDemoPointPassesTheGridOracle) {
  ContinuousSpec spec;
  spec.sig_figs_min = 12;
  spec.delta.kind = DeltaRule::Kind::absolute;
  spec.delta.absolute = 0.05;
  ContinuousProblem problem(spec);
  const demo_oracle::Grid grid;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(s);
    Rng start_rng(100 + s);
    const auto out = coordinate_descent(problem, problem.random_state(start_rng), IndexSet({0}), 1'000'000, rng);
    EXPECT_TRUE(grid.accepts(out[0], 0.05)) << out[0];
  }
}
