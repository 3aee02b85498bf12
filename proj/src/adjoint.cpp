#include "lqg/adjoint.hpp"


namespace lqg {

namespace {

std::vector<int> opponents_of(const GameSpec& spec, int i) {
  std::vector<int> out;
  for (int k = 0; k < spec.n(); ++k)
    if (k != i) out.push_back(k);
  return out;
}

void check_player(const GameSpec& spec, int i) {
  if (i < 0 || i >= spec.n()) throw Error("player index out of range");
}

}  // namespace

MeanAdjoints backward_mean_adjoints(const GameSpec& spec, const ForwardEnv& env,
                                    const StrategyProfile& profile, int i,
                                    const MeanPath* forcing_Xbar) {
  check_player(spec, i);
  const int N = spec.N(), d = spec.d(), m = spec.m();
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[i];
  const MeanPath& Xb = forcing_Xbar ? *forcing_Xbar : env.Xbar;
  if (int(Xb.size()) != N) throw Error("backward_mean_adjoints: missing env data");
  const auto opp = opponents_of(spec, i);
  const Vec wN = trapezoid_weights(N, dt);

  MeanAdjoints out;
  out.Hbar_X = zero_path(N, d);
  out.Vbar = zero_path(N, d);
  for (size_t q = 0; q < opp.size(); ++q) out.Hbar_k.emplace_back(N, m, 1);

  auto f = [&](int a) -> Vec { return pl.G_XX[a] * Xb[a] + pl.Gbar_X[a]; };
  const Vec fT = pl.G_XX_T * Xb[N - 1] + pl.Gbar_X_T;
  Vec lam = wN(N - 1) * f(N - 1) + fT;
  out.Hbar_X[N - 1] = fT;

  std::vector<Vec> lk(opp.size(), Vec::Zero(m * N));
  std::vector<Vec> s(opp.size());
  for (int a = N - 2; a >= 0; --a) {
    const int len = m * (a + 1);
    out.Hbar_X[a] = lam;
    Vec V = Vec::Zero(d);
    for (size_t q = 0; q < opp.size(); ++q) {
      const int k = opp[q];
      const Mat P = spec.players[k].precision(a);
      s[q] = env.filters[k].Xtilde.row(a) * lk[q].head(len);
      V += P * s[q];
      out.Hbar_k[q].row(a) = Eigen::Map<const Mat>(lk[q].data(), m, a + 1) / dt;
    }
    out.Vbar[a] = V;
    const Vec wd = expand_weights(trapezoid_weights(a + 1, dt), m);
    for (size_t q = 0; q < opp.size(); ++q) {
      const int k = opp[q];
      const Mat P = spec.players[k].precision(a);
      const Mat BD = spec.players[k].B[a] * profile.D[k].row(a);
      Vec g = BD.transpose() * lam - env.X.row(a).transpose() * (P * s[q]);
      lk[q].head(len) += dt * wd.cwiseProduct(g);
    }
    lam = wN(a) * f(a) + (Mat::Identity(d, d) + dt * spec.A[a]).transpose() * lam + dt * V;
  }
  return out;
}

KernelColumn backward_kernel_adjoints(const GameSpec& spec, const ForwardEnv& env,
                                      const StrategyProfile& profile, int i, int r,
                                      const TriKernel* forcing_X, bool keep_belief) {
  check_player(spec, i);
  const int N = spec.N(), d = spec.d(), m = spec.m();
  if (r < 0 || r >= N) throw Error("backward_kernel_adjoints: shock node off grid");
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[i];
  const TriKernel& Xf = forcing_X ? *forcing_X : env.X;
  const auto opp = opponents_of(spec, i);
  const Vec wN = trapezoid_weights(N, dt);

  KernelColumn out;
  out.r = r;
  out.H_X.assign(N, Mat::Zero(d, m));
  out.V.assign(N, Mat::Zero(d, m));
  if (keep_belief)
    for (size_t q = 0; q < opp.size(); ++q) out.H_k.emplace_back(N, m, m);

  auto f = [&](int a) -> Mat { return pl.G_XX[a] * Xf.at(a, r) + pl.G_X_kernel.at(a, r); };
  const Mat fT = pl.G_XX_T * Xf.at(N - 1, r) + pl.G_X_kernel_T.middleCols(r * m, m);
  Mat lam = wN(N - 1) * f(N - 1) + fT;
  out.H_X[N - 1] = fT;

  std::vector<Mat> lk(opp.size(), Mat::Zero(m * N, m));
  std::vector<Mat> s(opp.size());
  for (int a = N - 2; a >= r; --a) {
    const int len = m * (a + 1);
    out.H_X[a] = lam;
    Mat V = Mat::Zero(d, m);
    for (size_t q = 0; q < opp.size(); ++q) {
      const int k = opp[q];
      s[q] = env.filters[k].Xtilde.row(a) * lk[q].topRows(len);
      V += spec.players[k].precision(a) * s[q];
      if (keep_belief)
        for (int u = 0; u <= a; ++u) out.H_k[q].at(a, u) = lk[q].middleRows(u * m, m) / dt;
    }
    out.V[a] = V;
    if (a == r) break;
    const Vec wd = expand_weights(trapezoid_weights(a + 1, dt), m);
    for (size_t q = 0; q < opp.size(); ++q) {
      const int k = opp[q];
      const Mat P = spec.players[k].precision(a);
      const Mat BD = spec.players[k].B[a] * profile.D[k].row(a);
      Mat g = BD.transpose() * lam - env.X.row(a).transpose() * (P * s[q]);
      lk[q].topRows(len) += dt * wd.asDiagonal() * g;
    }
    lam = wN(a) * f(a) + (Mat::Identity(d, d) + dt * spec.A[a]).transpose() * lam + dt * V;
  }
  return out;
}

namespace {

// All shock columns at once: column block r of every buffer is the column-r
// system, active while r <= a.
void backward_kernel_batched(const GameSpec& spec, const ForwardEnv& env,
                             const StrategyProfile& profile, int i, const TriKernel& Xf,
                             bool keep_belief, AdjointSet& adj) {
  const int N = spec.N(), d = spec.d(), m = spec.m();
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[i];
  const auto& opp = adj.opponents;
  const Vec wN = trapezoid_weights(N, dt);

  const Mat fT = pl.G_XX_T * Xf.row(N - 1) + pl.G_X_kernel_T;
  Mat lam = wN(N - 1) * (pl.G_XX[N - 1] * Xf.row(N - 1) + pl.G_X_kernel.row(N - 1)) + fT;
  adj.H_X.row(N - 1) = fT;
  if (keep_belief) {
    adj.H_k.assign(opp.size(), {});
    for (size_t q = 0; q < opp.size(); ++q)
      for (int r = 0; r < N; ++r) adj.H_k[q].emplace_back(N, m, m);
  }

  std::vector<Mat> lk(opp.size(), Mat::Zero(m * N, m * N));
  std::vector<Mat> s(opp.size());
  for (int a = N - 2; a >= 0; --a) {
    const int len = m * (a + 1);
    adj.H_X.row(a) = lam.leftCols(len);
    Mat V = Mat::Zero(d, len);
    for (size_t q = 0; q < opp.size(); ++q) {
      const int k = opp[q];
      s[q].noalias() = env.filters[k].Xtilde.row(a) * lk[q].topLeftCorner(len, len);
      V.noalias() += spec.players[k].precision(a) * s[q];
      if (keep_belief)
        for (int r = 0; r <= a; ++r)
          for (int u = 0; u <= a; ++u)
            adj.H_k[q][r].at(a, u) = lk[q].block(u * m, r * m, m, m) / dt;
    }
    adj.V_kernel.row(a) = V;
    const Vec wd = dt * expand_weights(trapezoid_weights(a + 1, dt), m);
    for (size_t q = 0; q < opp.size(); ++q) {
      const int k = opp[q];
      const Mat P = spec.players[k].precision(a);
      const Mat BD = spec.players[k].B[a] * profile.D[k].row(a);
      Mat g = BD.transpose() * lam.leftCols(len);
      g.noalias() -= env.X.row(a).transpose() * (P * s[q]);
      lk[q].topLeftCorner(len, len).noalias() += wd.asDiagonal() * g;
    }
    const Mat f = pl.G_XX[a] * Xf.row(a) + pl.G_X_kernel.row(a);
    lam.leftCols(len) = wN(a) * f +
                        (Mat::Identity(d, d) + dt * spec.A[a]).transpose() * lam.leftCols(len) +
                        dt * V;
  }
}

}  // namespace

AdjointSet solve_adjoints(const GameSpec& spec, const ForwardEnv& env,
                          const StrategyProfile& profile, int i, const AdjointOptions& opts) {
  check_player(spec, i);
  const int N = spec.N(), d = spec.d(), m = spec.m();
  AdjointSet adj;
  adj.player = i;
  adj.opponents = opponents_of(spec, i);
  MeanAdjoints mean = backward_mean_adjoints(spec, env, profile, i, opts.forcing_Xbar);
  adj.Hbar_X = std::move(mean.Hbar_X);
  adj.Hbar_k = std::move(mean.Hbar_k);
  adj.Vbar = std::move(mean.Vbar);
  adj.H_X = TriKernel(N, d, m);
  adj.V_kernel = TriKernel(N, d, m);
  backward_kernel_batched(spec, env, profile, i, opts.forcing_X ? *opts.forcing_X : env.X,
                          opts.keep_belief_kernels, adj);
  return adj;
}

std::pair<MeanPath, TriKernel> best_response(const GameSpec& spec, const AdjointSet& adj, int i) {
  check_player(spec, i);
  const int N = spec.N(), d = spec.d(), m = spec.m();
  const auto& pl = spec.players[i];
  MeanPath Dbar = zero_path(N, d);
  TriKernel D(N, d, m);
  for (int a = 0; a < N; ++a) {
    const Mat K = pl.G_DD[a].ldlt().solve(pl.B[a].transpose());
    Dbar[a] = -K * adj.Hbar_X[a];
    D.row(a) = -K * adj.H_X.row(a);
  }
  return {std::move(Dbar), std::move(D)};
}

}  // namespace lqg
