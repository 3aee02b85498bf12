#pragma once

#include <string>
#include <vector>

#include "lqg/core.hpp"

namespace lqg {

struct PlayerSpec {
  int block = 1;             // noise block the player observes
  std::vector<Mat> Gamma;    // d x d observation gain
  std::vector<Mat> B;        // d x d control gain
  std::vector<Mat> G_XX;     // running state weight
  MeanPath Gbar_X;           // running linear state weight
  TriKernel G_X_kernel;      // d x m stochastic linear weight
  std::vector<double> G_const;
  std::vector<Mat> G_DD;     // effort weight
  Mat G_XX_T;                // terminal state weight
  Vec Gbar_X_T;
  Mat G_X_kernel_T;          // d x m(N) row over r at the terminal node

  Mat precision(int a) const { return Gamma[a].transpose() * Gamma[a]; }
};

struct GameSpec {
  TimeGrid grid;
  BlockLayout layout;
  Vec x0;
  std::vector<Mat> A;
  std::vector<Mat> Sigma;  // loads block 0
  std::vector<PlayerSpec> players;

  int N() const { return grid.N; }
  int n() const { return layout.n; }
  int d() const { return layout.d; }
  int m() const { return layout.m; }
};

// Unfilled game with zero costs, identity control gains and no information.
GameSpec blank_spec(const TimeGrid& grid, int n, int d);

void validate_spec(const GameSpec& spec);

enum class Mode {
  PrivateCompetitive,
  PrivateCooperative,
  PooledCompetitive,
  PooledCooperative,
  SinglePlayer,
  ZeroControlGain,
};

Mode parse_mode(const std::string& s);
std::string mode_name(Mode m);

struct ScenarioParams {
  double p1 = 3.0;
  double p2 = 3.0;
  double r1 = 0.1;
  double r2 = 0.1;
  double target1 = 1.0;
  double target2 = -1.0;
  double x0 = 0.0;
  double T = 1.0;
  int N = 40;
  double sigma = 1.0;
  Mode mode = Mode::PrivateCompetitive;
};

GameSpec build_two_player_tracking(const ScenarioParams& params);
GameSpec build_pooled(const ScenarioParams& params);
GameSpec build_single_player(const ScenarioParams& params);

// Dispatches on params.mode.
GameSpec build_scenario(const ScenarioParams& params);

}  // namespace lqg
