#include <gtest/gtest.h>

#include <cmath>

#include "lqg/analysis.hpp"

using namespace lqg;

namespace {

const GameSpec& bench_spec() {
  static const GameSpec s = build_scenario(ScenarioParams{});
  return s;
}

const EquilibriumSolution& bench() {
  static const EquilibriumSolution sol = picard_solve(bench_spec());
  return sol;
}

}  // namespace

TEST(Cost, UnobservedTrackingFromRest) {
  ScenarioParams q;
  q.mode = Mode::SinglePlayer;
  const GameSpec s = build_scenario(q);
  const auto p = zero_profile(s);
  const auto rep = expected_cost(s, forward_closure(s, p), p, 0);
  EXPECT_NEAR(rep.J, 1.5, 1e-12);
  EXPECT_EQ(rep.effort, 0.0);
}

TEST(Cost, ZeroCosts) {
  GameSpec s = blank_spec(make_grid(1.0, 10), 2, 1);
  for (auto& S : s.Sigma) S.setConstant(1.0);
  const auto p = zero_profile(s);
  EXPECT_EQ(expected_cost(s, forward_closure(s, p), p, 1).J, 0.0);
}

TEST(Cost, SymmetricBenchmark) {
  const auto& sol = bench();
  const double J1 = expected_cost(bench_spec(), sol.env, sol.profile, 0).J;
  const double J2 = expected_cost(bench_spec(), sol.env, sol.profile, 1).J;
  EXPECT_NEAR(J1, J2, 1e-10);
  EXPECT_THROW(expected_cost(bench_spec(), sol.env, sol.profile, 2), Error);
}

TEST(Deviation, NeverProfitable) {
  const auto& sol = bench();
  for (int i = 0; i < 2; ++i)
    for (int node : {0, 13, 26, 38})
      for (double eps : {1e-3, -1e-3, 1e-2})
        EXPECT_GE(unilateral_mean_deviation(bench_spec(), sol, i, node, eps), 0.0);
}

TEST(Effort, ZeroAndSignFlip) {
  const auto& sol = bench();
  const auto z = effort_metrics(zero_profile(bench_spec()), bench_spec().grid);
  EXPECT_EQ(z.total_effort, 0.0);
  EXPECT_EQ(z.energy[0], 0.0);
  StrategyProfile flipped = sol.profile;
  for (auto& path : flipped.Dbar)
    for (auto& v : path) v = -v;
  const auto a = effort_metrics(sol.profile, bench_spec().grid);
  const auto b = effort_metrics(flipped, bench_spec().grid);
  EXPECT_EQ(a.total_effort, b.total_effort);
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.total_path, b.total_path);
  EXPECT_NEAR(a.energy[0], a.energy[1], 1e-8);
  EXPECT_GT(a.total_effort, 0.0);
}

TEST(FullInformation, SymmetricAndSinglePlayerRiccati) {
  const auto fi = full_information_benchmark(bench_spec());
  for (int a = 0; a < bench_spec().N(); ++a) {
    EXPECT_NEAR(fi.Xbar[a](0), 0.0, 1e-12);
    EXPECT_NEAR(fi.Dbar[0][a](0), -fi.Dbar[1][a](0), 1e-12);
  }
  ScenarioParams q;
  q.mode = Mode::SinglePlayer;
  const GameSpec s = build_scenario(q);
  const auto one = full_information_benchmark(s);
  const auto ric = riccati_single_player(s);
  // u = -(S x + s) / r at the first node.
  EXPECT_NEAR(one.Dbar[0][0](0), -(ric.S[0](0, 0) * 0.0 + ric.s[0](0)) / 0.1, 1e-6);
}

TEST(Pooling, CooperativeGainWithUninformedPartner) {
  const auto rows = pooling_comparison(ScenarioParams{}, {0.0}, SolverConfig{});
  ASSERT_EQ(rows.size(), 4u);
  double coop = 0.0;
  for (const auto& r : rows) {
    EXPECT_TRUE(r.converged);
    if (r.mode == "cooperative") coop += r.gain;
  }
  EXPECT_GE(coop, 0.0);
}

TEST(Wedge, GrowsWithOpponentPrecision) {
  double prev = 0.0;
  for (double p2 : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    ScenarioParams q;
    q.p2 = p2;
    const GameSpec s = build_scenario(q);
    const auto sol = picard_solve(s);
    double peak = 0.0;
    for (const auto& v : sol.adjoints[0].Vbar) peak = std::max(peak, v.norm());
    EXPECT_GE(peak, prev) << "p2=" << p2;
    prev = peak;
  }
}

TEST(Sweep, ValidatesSplits) {
  EXPECT_THROW(precision_sweep(ScenarioParams{}, 20, {25}, SolverConfig{}), Error);
  EXPECT_THROW(precision_sweep(ScenarioParams{}, -1, {0}, SolverConfig{}), Error);
  const auto rep = precision_sweep(ScenarioParams{}, 18, {9}, SolverConfig{});
  ASSERT_EQ(rep.cells.size(), 1u);
  const auto& c = rep.cells[0];
  EXPECT_TRUE(c.converged);
  EXPECT_EQ(c.p2_sq, 9.0);
  EXPECT_NEAR(c.cost[0], c.cost[1], 1e-10);
  EXPECT_NEAR(c.mean_state_T, 0.0, 1e-12);
}
