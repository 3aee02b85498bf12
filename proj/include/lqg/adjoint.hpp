#pragma once

#include <utility>
#include <vector>

#include "lqg/core.hpp"
#include "lqg/forward.hpp"
#include "lqg/model.hpp"

namespace lqg {

// Belief adjoints are stored in cell-integrated form: summing dt * X~ * H
// over the slice reproduces the wedge exactly.
struct AdjointSet {
  int player = 0;
  std::vector<int> opponents;
  MeanPath Hbar_X;
  std::vector<TriKernel> Hbar_k;  // per opponent, m x 1 over (t, u)
  TriKernel H_X;                  // d x m over (t, r)
  // per opponent, per shock node r: m x m over (t, u); empty unless requested
  std::vector<std::vector<TriKernel>> H_k;
  MeanPath Vbar;
  TriKernel V_kernel;  // d x m over (t, r)
};

struct MeanAdjoints {
  MeanPath Hbar_X;
  std::vector<TriKernel> Hbar_k;
  MeanPath Vbar;
};

struct KernelColumn {
  int r = 0;
  std::vector<Mat> H_X;                 // index a, valid for a >= r
  std::vector<Mat> V;                   // index a, valid for a >= r
  std::vector<TriKernel> H_k;           // per opponent; empty unless requested
};

// The env supplies every coefficient. The running forcing uses the env
// state unless an override is passed; the solver uses overrides to evaluate
// the costate response to a trial profile at frozen coefficients.
MeanAdjoints backward_mean_adjoints(const GameSpec& spec, const ForwardEnv& env,
                                    const StrategyProfile& profile, int i,
                                    const MeanPath* forcing_Xbar = nullptr);

// One shock column on its own. solve_adjoints integrates all columns in a
// single batched pass with identical arithmetic.
KernelColumn backward_kernel_adjoints(const GameSpec& spec, const ForwardEnv& env,
                                      const StrategyProfile& profile, int i, int r,
                                      const TriKernel* forcing_X = nullptr,
                                      bool keep_belief = false);

struct AdjointOptions {
  bool keep_belief_kernels = false;
  const MeanPath* forcing_Xbar = nullptr;
  const TriKernel* forcing_X = nullptr;
};

AdjointSet solve_adjoints(const GameSpec& spec, const ForwardEnv& env,
                          const StrategyProfile& profile, int i,
                          const AdjointOptions& opts = {});

// First-order condition: D = -G_DD^{-1} B^T H.
std::pair<MeanPath, TriKernel> best_response(const GameSpec& spec, const AdjointSet& adj, int i);

}  // namespace lqg
