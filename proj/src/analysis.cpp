#include "lqg/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace lqg {

CostReport expected_cost(const GameSpec& spec, const ForwardEnv& env,
                         const StrategyProfile& profile, int i) {
  check_profile(spec, profile);
  if (i < 0 || i >= spec.n()) throw Error("expected_cost: player out of range");
  const int N = spec.N(), m = spec.m();
  if (int(env.Xbar.size()) != N || env.X.N() != N || int(env.Dcal.size()) != spec.n())
    throw Error("expected_cost: env does not match the game");
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[i];
  const Vec wN = trapezoid_weights(N, dt);

  CostReport rep;
  rep.state_integrand.assign(N, 0.0);
  rep.effort_integrand.assign(N, 0.0);
  for (int a = 0; a < N; ++a) {
    const Vec w = expand_weights(trapezoid_weights(a + 1, dt), m);
    const Mat& Xr = env.X.row(a);
    const Vec& xb = env.Xbar[a];
    const Mat cov = Xr * w.asDiagonal() * Xr.transpose();
    const double lin = (pl.G_X_kernel.row(a) * w.asDiagonal() * Xr.transpose()).trace();
    const double state = xb.dot(pl.G_XX[a] * xb) + (pl.G_XX[a] * cov).trace() +
                         2.0 * pl.Gbar_X[a].dot(xb) + 2.0 * lin;
    rep.state_integrand[a] = state + pl.G_const[a];
    rep.tracking += wN(a) * state;
    rep.constant += wN(a) * pl.G_const[a];

    const Mat& Dr = env.Dcal[i].row(a);
    const Vec& db = profile.Dbar[i][a];
    const double eff = db.dot(pl.G_DD[a] * db) +
                       (pl.G_DD[a] * (Dr * w.asDiagonal() * Dr.transpose())).trace();
    rep.effort_integrand[a] = eff;
    if (a + 1 < N) rep.effort += dt * eff;

    if (a == N - 1) {
      const double lin_T = (pl.G_X_kernel_T * w.asDiagonal() * Xr.transpose()).trace();
      rep.tracking += xb.dot(pl.G_XX_T * xb) + (pl.G_XX_T * cov).trace() +
                      2.0 * pl.Gbar_X_T.dot(xb) + 2.0 * lin_T;
    }
  }
  rep.J = rep.tracking + rep.effort + rep.constant;
  return rep;
}

double unilateral_mean_deviation(const GameSpec& spec, const EquilibriumSolution& sol, int i,
                                 int node, double eps, const Vec& v_in) {
  const int N = spec.N(), d = spec.d();
  if (node < 0 || node >= N) throw Error("unilateral_mean_deviation: node off grid");
  const Vec v = v_in.size() ? v_in : Vec(Vec::Unit(d, 0));
  MeanPath du = zero_path(N, d);
  du[node] = eps * v;
  const MeanPath dX = mean_deviation_response(spec, sol, i, du);

  ForwardEnv env = sol.env;
  StrategyProfile prof = sol.profile;
  for (int a = 0; a < N; ++a) env.Xbar[a] += dX[a];
  prof.Dbar[i][node] += du[node];
  const double base = expected_cost(spec, sol.env, sol.profile, i).J;
  return expected_cost(spec, env, prof, i).J - base;
}

EffortSummary effort_metrics(const StrategyProfile& profile, const TimeGrid& grid) {
  const int N = grid.N, n = profile.players();
  const Vec w = trapezoid_weights(N, grid.dt);
  EffortSummary out;
  out.total_path.assign(N, 0.0);
  out.energy.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (int(profile.Dbar[i].size()) != N) throw Error("effort_metrics: grid mismatch");
    for (int a = 0; a < N; ++a) {
      const double mag = profile.Dbar[i][a].norm();
      out.total_path[a] += mag;
      out.energy[i] += w(a) * mag * mag;
    }
  }
  for (int a = 0; a < N; ++a) out.total_effort += w(a) * out.total_path[a];
  return out;
}

namespace {

Mat lerp(const std::vector<Mat>& path, double t, double dt) {
  const int N = int(path.size());
  const int a = std::clamp(int(std::floor(t / dt)), 0, N - 2);
  const double th = std::clamp(t / dt - a, 0.0, 1.0);
  return (1.0 - th) * path[a] + th * path[a + 1];
}

}  // namespace

FullInfoBenchmark full_information_benchmark(const GameSpec& spec, int substeps) {
  const int N = spec.N(), n = spec.n(), d = spec.d();
  const double dt = spec.grid.dt, T = spec.grid.T;
  std::vector<std::vector<Mat>> K(n, std::vector<Mat>(N)), G(n), g(n);
  for (int i = 0; i < n; ++i) {
    const auto& pl = spec.players[i];
    for (int a = 0; a < N; ++a) {
      K[i][a] = pl.B[a] * pl.G_DD[a].ldlt().solve(pl.B[a].transpose());
      G[i].push_back(pl.G_XX[a]);
      g[i].push_back(pl.Gbar_X[a]);
    }
  }
  // Columns of player i: [S_i | s_i].
  const int w = d + 1;
  auto rhs = [&](double t, const Mat& y) -> Mat {
    const Mat A = lerp(spec.A, t, dt);
    std::vector<Mat> Kt(n);
    Mat Acl = A;
    for (int k = 0; k < n; ++k) {
      Kt[k] = lerp(K[k], t, dt);
      Acl -= Kt[k] * y.middleCols(k * w, d);
    }
    Mat dy(d, n * w);
    for (int i = 0; i < n; ++i) {
      const Mat S = y.middleCols(i * w, d);
      const Vec s = y.col(i * w + d);
      Vec cross = Vec::Zero(d);
      for (int k = 0; k < n; ++k)
        if (k != i) cross += Kt[k] * y.col(k * w + d);
      // Reversed time: the derivative in tau = T - t is minus the time derivative.
      dy.middleCols(i * w, d) = lerp(G[i], t, dt) + Acl.transpose() * S + S * Acl +
                                S * Kt[i] * S;
      dy.col(i * w + d) = lerp(g[i], t, dt) + Acl.transpose() * s - S * cross;
    }
    return dy;
  };
  std::vector<Mat> Y(N);
  Mat y(d, n * w);
  for (int i = 0; i < n; ++i) {
    y.middleCols(i * w, d) = spec.players[i].G_XX_T;
    y.col(i * w + d) = spec.players[i].Gbar_X_T;
  }
  Y[N - 1] = y;
  const double h = dt / substeps;
  for (int a = N - 1; a > 0; --a) {
    for (int k = 0; k < substeps; ++k) {
      const double t = a * dt - k * h;
      const Mat k1 = rhs(t, y);
      const Mat k2 = rhs(t - 0.5 * h, y + 0.5 * h * k1);
      const Mat k3 = rhs(t - 0.5 * h, y + 0.5 * h * k2);
      const Mat k4 = rhs(t - h, y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Y[a - 1] = y;
  }
  (void)T;

  auto control = [&](int i, double t, const Vec& x) -> Vec {
    const auto& pl = spec.players[i];
    const Mat Yt = lerp(Y, t, dt);
    const Mat Bt = lerp(pl.B, t, dt), Rt = lerp(pl.G_DD, t, dt);
    return -Rt.ldlt().solve(Bt.transpose() * (Yt.middleCols(i * w, d) * x + Yt.col(i * w + d)));
  };
  auto drift = [&](double t, const Vec& x) -> Vec {
    Vec v = lerp(spec.A, t, dt) * x;
    for (int i = 0; i < n; ++i) v += lerp(spec.players[i].B, t, dt) * control(i, t, x);
    return v;
  };
  FullInfoBenchmark out;
  out.Xbar = zero_path(N, d);
  out.Dbar.assign(n, zero_path(N, d));
  Vec x = spec.x0;
  for (int a = 0; a < N; ++a) {
    out.Xbar[a] = x;
    for (int i = 0; i < n; ++i) out.Dbar[i][a] = control(i, a * dt, x);
    if (a + 1 == N) break;
    for (int k = 0; k < substeps; ++k) {
      const double t = a * dt + k * h;
      const Vec k1 = drift(t, x);
      const Vec k2 = drift(t + 0.5 * h, x + 0.5 * h * k1);
      const Vec k3 = drift(t + 0.5 * h, x + 0.5 * h * k2);
      const Vec k4 = drift(t + h, x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return out;
}

std::vector<PoolingRow> pooling_comparison(const ScenarioParams& base,
                                           const std::vector<double>& p2_grid,
                                           const SolverConfig& config) {
  std::vector<PoolingRow> rows;
  const std::pair<Mode, Mode> modes[] = {
      {Mode::PrivateCompetitive, Mode::PooledCompetitive},
      {Mode::PrivateCooperative, Mode::PooledCooperative}};
  for (const auto& [priv_mode, pool_mode] : modes) {
    const std::string tag = priv_mode == Mode::PrivateCompetitive ? "competitive" : "cooperative";
    for (double p2 : p2_grid) {
      ScenarioParams q = base;
      q.p2 = p2;
      q.mode = priv_mode;
      const GameSpec priv = build_scenario(q);
      q.mode = pool_mode;
      const GameSpec pool = build_scenario(q);
      const auto s_priv = picard_solve(priv, config);
      const auto s_pool = picard_solve(pool, config);
      for (int i = 0; i < 2; ++i) {
        PoolingRow r;
        r.p2 = p2;
        r.mode = tag;
        r.player = i + 1;
        r.private_cost = expected_cost(priv, s_priv.env, s_priv.profile, i).J;
        r.pooled_cost = expected_cost(pool, s_pool.env, s_pool.profile, i).J;
        r.gain = r.private_cost - r.pooled_cost;
        r.converged = s_priv.converged && s_pool.converged;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

SweepReport precision_sweep(const ScenarioParams& base, double budget,
                            const std::vector<double>& p1_sq_grid, const SolverConfig& config) {
  if (!(budget >= 0)) throw Error("precision budget must be nonnegative");
  SweepReport rep;
  rep.budget = budget;
  for (double s1 : p1_sq_grid) {
    if (s1 < 0 || s1 > budget) throw Error("split outside the budget");
    ScenarioParams q = base;
    q.mode = Mode::PrivateCompetitive;
    q.p1 = std::sqrt(s1);
    q.p2 = std::sqrt(std::max(budget - s1, 0.0));
    const GameSpec spec = build_scenario(q);
    const auto sol = picard_solve(spec, config);
    SweepCell c;
    c.p1_sq = s1;
    c.p2_sq = budget - s1;
    c.converged = sol.converged;
    c.iterations = sol.iterations;
    const auto eff = effort_metrics(sol.profile, spec.grid);
    c.energy = eff.energy;
    c.total_effort = eff.total_effort;
    c.mean_state_T = sol.env.Xbar.back()(0);
    for (int i = 0; i < spec.n(); ++i) {
      c.cost.push_back(expected_cost(spec, sol.env, sol.profile, i).J);
      double wmax = 0.0;
      for (const auto& v : sol.adjoints[i].Vbar) wmax = std::max(wmax, v.norm());
      c.wedge_max.push_back(wmax);
    }
    const auto fi = full_information_benchmark(spec);
    StrategyProfile ce = zero_profile(spec);
    ce.Dbar = fi.Dbar;
    const auto ce_eff = effort_metrics(ce, spec.grid);
    c.ce_energy = ce_eff.energy;
    c.ce_total_effort = ce_eff.total_effort;
    rep.cells.push_back(std::move(c));
  }
  return rep;
}

}  // namespace lqg
