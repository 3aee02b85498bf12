#pragma once

#include <string>
#include <vector>

#include "lqg/equilibrium.hpp"

namespace lqg {

struct CostReport {
  double J = 0.0;
  double tracking = 0.0;  // quadratic and linear state terms, terminal included
  double effort = 0.0;
  double constant = 0.0;
  std::vector<double> state_integrand;   // per node, before quadrature weights
  std::vector<double> effort_integrand;  // per node; last node carries no weight
};

// State terms use the trapezoid rule in t; effort terms use the left nodes,
// matching the control timing of the Euler step.
CostReport expected_cost(const GameSpec& spec, const ForwardEnv& env,
                         const StrategyProfile& profile, int i);

// Change in player i's expected cost when its mean action at `node` moves
// by eps * v while opponents keep their strategy maps.
double unilateral_mean_deviation(const GameSpec& spec, const EquilibriumSolution& sol, int i,
                                 int node, double eps, const Vec& v = Vec());

struct EffortSummary {
  std::vector<double> total_path;  // sum_i |Dbar_i(t)|
  std::vector<double> energy;      // per player int |Dbar_i|^2 dt
  double total_effort = 0.0;       // int sum_i |Dbar_i| dt
};

EffortSummary effort_metrics(const StrategyProfile& profile, const TimeGrid& grid);

struct FullInfoBenchmark {
  std::vector<MeanPath> Dbar;  // per player mean controls
  MeanPath Xbar;
};

// Deterministic feedback Nash game on the mean system with perfect state
// observation (coupled Riccati equations).
FullInfoBenchmark full_information_benchmark(const GameSpec& spec, int substeps = 20);

struct PoolingRow {
  double p2 = 0.0;
  std::string mode;  // competitive | cooperative
  int player = 0;
  double private_cost = 0.0;
  double pooled_cost = 0.0;
  double gain = 0.0;
  bool converged = false;
};

std::vector<PoolingRow> pooling_comparison(const ScenarioParams& base,
                                           const std::vector<double>& p2_grid,
                                           const SolverConfig& config);

struct SweepCell {
  double p1_sq = 0.0;
  double p2_sq = 0.0;
  std::vector<double> cost;
  std::vector<double> energy;
  double total_effort = 0.0;
  double mean_state_T = 0.0;
  std::vector<double> wedge_max;
  std::vector<double> ce_energy;  // full-information comparison
  double ce_total_effort = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct SweepReport {
  double budget = 0.0;
  std::vector<SweepCell> cells;
};

// Splits are values of p1^2; p2^2 = budget - p1^2 and p_i = sqrt(p_i^2).
SweepReport precision_sweep(const ScenarioParams& base, double budget,
                            const std::vector<double>& p1_sq_grid, const SolverConfig& config);

}  // namespace lqg
