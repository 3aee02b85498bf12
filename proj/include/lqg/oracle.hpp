#pragma once

#include <cstdint>
#include <vector>

#include "lqg/equilibrium.hpp"

namespace lqg {

// Conditioning maps at node a: rows and columns run over the stacked cell
// increments of cells 0..a (m each). Exact holds E[dW | dY^i] from dense
// Gaussian conditioning; kernel holds Pi + dt * F contracted with the
// trapezoid weights of the slice.
struct ProjectionTable {
  int player = 0;
  int node = 0;
  Mat exact;
  Mat kernel;
  Mat exact_full;  // over all N cells, for idempotence checks

  double max_abs_error() const { return (exact - kernel).cwiseAbs().maxCoeff(); }
};

// Every cell has variance dt and cell a is fully realized at node a.
// `env` must come from forward_closure on `profile` with retained slices.
ProjectionTable exact_discrete_projection(const GameSpec& spec, const StrategyProfile& profile,
                                          const ForwardEnv& env, int player, int node);

// How simulated players filter the shocks. ExactKalman conditions the
// discrete system exactly. KernelGain runs the innovations recursion with the
// gain X~^T Gamma^T taken from the kernel filter, and splits each innovation
// evenly between the two own-noise halves it covers.
enum class FilterRule { KernelGain, ExactKalman };

// Linear closed loop driven by half-cell shocks: cell b splits at t_b into a
// left and a right half of variance dt/2 each, so at node a cell a is half
// realized and cell 0 has only its right half. All maps act on the vector xi
// of standardized half-cell shocks (2N slots of m coordinates). Each player
// carries an estimate vector e with e = H xi.
struct DiscreteClosedLoop {
  FilterRule rule = FilterRule::KernelGain;
  int slots = 0;                          // 2N
  MeanPath Xbar;
  std::vector<Mat> M;                     // d x (slots m): X_a - Xbar_a
  std::vector<std::vector<Mat>> U;        // per player, per node: control minus mean
  std::vector<std::vector<Mat>> obs;      // per player, per node a < N-1: dY_a minus mean
  std::vector<std::vector<Mat>> predict;  // per player, a < N-1: E[dY_a | info] minus mean, map of e
  std::vector<std::vector<Mat>> gain;     // per player, a < N-1
  std::vector<std::vector<Mat>> policy;   // per player: control minus mean as a map of e
  std::vector<std::vector<Mat>> xhat;     // per player: Xhat_a - Xbar_a as a map of e
  std::vector<std::vector<Mat>> err_cov;  // per player: Var(X_a - Xhat_a)
};

DiscreteClosedLoop discrete_closed_loop(const GameSpec& spec, const StrategyProfile& profile,
                                        FilterRule rule = FilterRule::KernelGain);

// Exact expected cost of the discrete closed loop with the same quadrature
// as expected_cost. Needs G_X_kernel = 0.
double discrete_expected_cost(const GameSpec& spec, const StrategyProfile& profile,
                              const DiscreteClosedLoop& loop, int i);

// Standard normals for one path, column a feeding node a. The stream is keyed
// on (seed, path) alone, so paths can be generated in any order.
Mat path_shocks(std::uint64_t seed, std::uint64_t path, int per_node, int nodes);

// Each row is one path; columns are node-major (node * d + coordinate).
struct PathEnsemble {
  int M = 0;
  std::uint64_t seed = 0;
  int N = 0;
  int d = 0;
  Mat X;
  std::vector<Mat> Xhat;  // per player
  std::vector<Mat> U;     // per player
  std::vector<Mat> Y;     // per player, increments over [t_a, t_a+1]; last node zero
};

struct SimulationOptions {
  int threads = 1;
  FilterRule rule = FilterRule::KernelGain;
};

// Euler-Maruyama closed loop. Each player filters the primitive shocks from
// its own observations with the innovations recursion and acts through its
// policy kernel on the filtered increments.
PathEnsemble simulate_closed_loop(const GameSpec& spec, const StrategyProfile& profile, int M,
                                  std::uint64_t seed, const SimulationOptions& opts = {});

struct MonteCarloEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

MonteCarloEstimate monte_carlo_cost(const PathEnsemble& ensemble, const GameSpec& spec, int i);

// Sample variance of X_a - Xhat^i_a at each node, per coordinate.
std::vector<Vec> empirical_error_variance(const PathEnsemble& ensemble, int i);

}  // namespace lqg
