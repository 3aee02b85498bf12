#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqg/adjoint.hpp"
#include "lqg/core.hpp"
#include "lqg/forward.hpp"
#include "lqg/model.hpp"

namespace lqg {

// How one application of the best-response operator treats the profile
// fed into the backward pass.
enum class ResponseScheme {
  // Solve the linear first-order system of all players at the filter and
  // costate coefficients of the current environment.
  FrozenCoefficients,
  // Single forward/backward pass at the current profile.
  SinglePass,
};

struct SolverConfig {
  double tol = 1e-5;
  int max_iter = 200;
  double damping = 1.0;
  bool auto_damping = true;
  std::string norm = "linf";
  ResponseScheme scheme = ResponseScheme::FrozenCoefficients;
  double inner_tol = 1e-12;
  int inner_max_iter = 400;
  // Random initial profile with entries uniform in [-scale, scale];
  // zero means start from the zero profile.
  double init_scale = 0.0;
  std::uint64_t seed = 1;
  bool keep_belief_kernels = false;
  int threads = 1;
};

struct EquilibriumSolution {
  StrategyProfile profile;
  ForwardEnv env;
  std::vector<AdjointSet> adjoints;
  std::vector<double> residual_history;
  std::vector<int> inner_iterations;
  bool converged = false;
  int iterations = 0;
  double final_damping = 1.0;
};

double policy_residual(const StrategyProfile& a, const StrategyProfile& b);

// One application of the best-response operator. Returns the new profile
// and fills `env` with the forward environment of `profile`.
StrategyProfile best_response_map(const GameSpec& spec, const StrategyProfile& profile,
                                  const SolverConfig& config, ForwardEnv& env,
                                  int* inner_iterations = nullptr);

EquilibriumSolution picard_solve(const GameSpec& spec, const SolverConfig& config = {});

struct RiccatiPaths {
  std::vector<Mat> S;
  MeanPath s;
};

// Reference solutions on a fine RK4 grid, sampled at the nodes.
RiccatiPaths riccati_single_player(const GameSpec& spec, int substeps = 20);
std::vector<Mat> kalman_bucy_cov(const GameSpec& spec, int player = 0, int substeps = 20);

// Mean response of the state to a change du in player i's mean action,
// opponents keeping their strategy maps and updating their beliefs with
// the frozen kernels of the solution.
MeanPath mean_deviation_response(const GameSpec& spec, const EquilibriumSolution& sol, int i,
                                 const MeanPath& du);

// Directional derivative of player i's cost for a mean-action spike of
// unit area at node t0 in direction v (defaults to the first coordinate).
double mean_spike_sensitivity(const GameSpec& spec, const EquilibriumSolution& sol, int i,
                              int t0, const Vec& v = Vec());

}  // namespace lqg
