#include "lqg/forward.hpp"

namespace lqg {

StrategyProfile zero_profile(const GameSpec& spec) {
  StrategyProfile p;
  for (int i = 0; i < spec.n(); ++i) {
    p.Dbar.push_back(zero_path(spec.N(), spec.d()));
    p.D.emplace_back(spec.N(), spec.d(), spec.m());
  }
  return p;
}

void check_profile(const GameSpec& spec, const StrategyProfile& p) {
  if (p.players() != spec.n() || int(p.D.size()) != spec.n())
    throw Error("profile and game disagree on player count");
  for (int i = 0; i < spec.n(); ++i) {
    if (int(p.Dbar[i].size()) != spec.N() || p.D[i].N() != spec.N())
      throw Error("profile and game disagree on grid");
    if (p.D[i].rows() != spec.d() || p.D[i].cols() != spec.m())
      throw Error("profile kernel shape mismatch");
  }
}

Mat primitive_noise_control(const Mat& D_row, const SliceKernel& F, const BlockLayout& layout,
                            int block, double dt) {
  const int count = int(D_row.cols() / layout.m);
  if (F.count() != count) throw Error("primitive_noise_control: shape mismatch");
  const Vec w = expand_weights(trapezoid_weights(count, dt), layout.m);
  Mat out = block_project(D_row, layout, block);
  out.noalias() += (D_row * w.asDiagonal()) * F.mat();
  return out;
}

namespace {

// Euler step of the mean and the existing kernel columns from a to a+1,
// then the new diagonal.
void step_state(const GameSpec& spec, int a, const StrategyProfile& profile,
                const std::vector<Mat>& dcal_rows, MeanPath& Xbar, TriKernel& X) {
  const double dt = spec.grid.dt;
  const int m = spec.m();
  Vec drift = spec.A[a] * Xbar[a];
  Mat kdrift = spec.A[a] * X.row(a);
  for (int k = 0; k < spec.n(); ++k) {
    const Mat& B = spec.players[k].B[a];
    drift += B * profile.Dbar[k][a];
    kdrift.noalias() += B * dcal_rows[k];
  }
  Xbar[a + 1] = Xbar[a] + dt * drift;
  X.row(a + 1).leftCols(m * (a + 1)) = X.row(a) + dt * kdrift;
  X.at(a + 1, a + 1) = spec.Sigma[a + 1] * spec.layout.selector(0);
}

void init_state(const GameSpec& spec, MeanPath& Xbar, TriKernel& X) {
  Xbar = zero_path(spec.N(), spec.d());
  Xbar[0] = spec.x0;
  X = TriKernel(spec.N(), spec.d(), spec.m());
  X.at(0, 0) = spec.Sigma[0] * spec.layout.selector(0);
}

}  // namespace

ForwardEnv forward_closure(const GameSpec& spec, const StrategyProfile& profile,
                           const ForwardOptions& opts) {
  check_profile(spec, profile);
  const int N = spec.N(), n = spec.n();
  const double dt = spec.grid.dt;
  ForwardEnv env;
  init_state(spec, env.Xbar, env.X);
  for (int k = 0; k < n; ++k) {
    env.filters.push_back(start_filter(k, spec.players[k].block, env.X.row(0), spec.layout, N,
                                       dt, opts.retain_slices));
    env.Dcal.emplace_back(N, spec.d(), spec.m());
  }
  std::vector<Mat> rows(n);
  for (int a = 0; a < N; ++a) {
    for (int k = 0; k < n; ++k) {
      rows[k] = primitive_noise_control(profile.D[k].row(a), env.filters[k].F, spec.layout,
                                        spec.players[k].block, dt);
      env.Dcal[k].row(a) = rows[k];
    }
    if (a == N - 1) break;
    step_state(spec, a, profile, rows, env.Xbar, env.X);
    for (int k = 0; k < n; ++k)
      advance_filter(env.filters[k], env.X.row(a + 1), spec.players[k].Gamma[a],
                     spec.players[k].Gamma[a + 1], spec.layout, dt);
  }
  return env;
}

StatePaths frozen_filter_closure(const GameSpec& spec, const ForwardEnv& env,
                                 const StrategyProfile& profile) {
  check_profile(spec, profile);
  const int N = spec.N(), n = spec.n();
  const double dt = spec.grid.dt;
  StatePaths out;
  init_state(spec, out.Xbar, out.X);
  std::vector<Mat> rows(n);
  for (int a = 0; a + 1 < N; ++a) {
    for (int k = 0; k < n; ++k)
      rows[k] = primitive_noise_control(profile.D[k].row(a), env.filters[k].slice(a),
                                        spec.layout, spec.players[k].block, dt);
    step_state(spec, a, profile, rows, out.Xbar, out.X);
  }
  return out;
}

}  // namespace lqg
