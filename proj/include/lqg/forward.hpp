#pragma once

#include <vector>

#include "lqg/core.hpp"
#include "lqg/filtering.hpp"
#include "lqg/model.hpp"

namespace lqg {

struct StrategyProfile {
  std::vector<MeanPath> Dbar;  // per player, d-vectors
  std::vector<TriKernel> D;    // per player, d x m

  int players() const { return int(Dbar.size()); }
};

StrategyProfile zero_profile(const GameSpec& spec);
void check_profile(const GameSpec& spec, const StrategyProfile& p);

struct ForwardEnv {
  MeanPath Xbar;
  TriKernel X;                       // d x m, diagonal Sigma in block 0
  std::vector<FilterState> filters;  // per player
  std::vector<TriKernel> Dcal;       // per player, d x m
};

struct ForwardOptions {
  bool retain_slices = false;
};

// D(u) Pi + int D(u) F(u, s) du for one time slice.
Mat primitive_noise_control(const Mat& D_row, const SliceKernel& F, const BlockLayout& layout,
                            int block, double dt);

ForwardEnv forward_closure(const GameSpec& spec, const StrategyProfile& profile,
                           const ForwardOptions& opts = {});

struct StatePaths {
  MeanPath Xbar;
  TriKernel X;
};

// State paths under `profile` with every player's filter slices held at
// those stored in `env` (which must retain slices).
StatePaths frozen_filter_closure(const GameSpec& spec, const ForwardEnv& env,
                                 const StrategyProfile& profile);

}  // namespace lqg
