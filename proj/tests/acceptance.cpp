// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lqg/analysis.hpp"
#include "lqg/oracle.hpp"

using namespace lqg;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!ok) note << " [failed: " << what << "]";
  }
};

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double kernel_diff(const TriKernel& a, const TriKernel& b) {
  double out = 0.0;
  for (int r = 0; r < a.N(); ++r) out = std::max(out, max_abs(a.row(r) - b.row(r)));
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

ScenarioParams benchmark() { return ScenarioParams{}; }

// 1
void benchmark_convergence(Outcome& o) {
  const GameSpec spec = build_scenario(benchmark());
  SolverConfig cfg;
  cfg.threads = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const auto sol = picard_solve(spec, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& h = sol.residual_history;
  std::vector<double> ratios;
  for (size_t k = 1; k < h.size(); ++k) ratios.push_back(h[k] / h[k - 1]);
  const double med = ratios.empty() ? 0.0 : median(ratios);
  const double last = h.empty() ? 0.0 : h.back();
  o.note << "iterations " << sol.iterations << ", residual " << last << ", median ratio " << med
         << ", wall " << secs << " s";
  o.require(sol.converged && last <= 1e-5, "residual <= 1e-5");
  o.require(sol.iterations <= 40, "iterations <= 40");
  o.require(med < 0.8, "median ratio < 0.8");
  o.require(secs < 1.0, "wall time < 1 s");
}

// 2
double kalman_bucy_error(int N) {
  ScenarioParams q;
  q.mode = Mode::SinglePlayer;
  q.p1 = 3.0;
  q.N = N;
  const GameSpec spec = build_scenario(q);
  const auto env = forward_closure(spec, zero_profile(spec));
  const double r3 = std::sqrt(3.0);
  double err = 0.0;
  for (int a = 1; a < N; ++a) {
    const double ref = std::tanh(r3 * spec.grid.t(a)) / r3;
    err = std::max(err, std::abs(env.filters[0].Sigma_XX[a](0, 0) - ref) / ref);
  }
  return err;
}

void kalman_bucy(Outcome& o) {
  const double e80 = kalman_bucy_error(80), e160 = kalman_bucy_error(160),
               e320 = kalman_bucy_error(320);
  o.note << "max rel error N=80 " << e80 << ", N=160 " << e160 << ", N=320 " << e320;
  o.require(e160 <= 0.02, "rel error <= 2% at N=160");
  o.require(e160 <= 0.6 * e80 && e320 <= 0.6 * e160, "error halves with N");
}

// 3
void single_player(Outcome& o) {
  ScenarioParams q;
  q.mode = Mode::SinglePlayer;
  const GameSpec spec = build_scenario(q);
  const auto sol = picard_solve(spec);
  const auto ric = riccati_single_player(spec);
  const auto& f = sol.env.filters[0];
  const double dt = spec.grid.dt;
  double full = 0, full_scale = 0, obs = 0, obs_scale = 0, wedge = 0;
  for (int a = 0; a < spec.N(); ++a) {
    const Mat& H = sol.adjoints[0].H_X.row(a);
    const Mat SX = ric.S[a] * sol.env.X.row(a);
    full = std::max(full, max_abs(H - SX));
    full_scale = std::max(full_scale, max_abs(H));
    const Mat Hp = primitive_noise_control(H, f.slice(a), spec.layout, f.block, dt);
    const Mat Sp = primitive_noise_control(SX, f.slice(a), spec.layout, f.block, dt);
    obs = std::max(obs, max_abs(Hp - Sp));
    obs_scale = std::max(obs_scale, max_abs(Hp));
    wedge = std::max({wedge, max_abs(sol.adjoints[0].Vbar[a]),
                      max_abs(sol.adjoints[0].V_kernel.row(a))});
  }
  // Exogenous signals: no control enters the state.
  GameSpec exo = build_scenario(benchmark());
  for (auto& pl : exo.players)
    for (auto& B : pl.B) B.setZero();
  const auto sx = picard_solve(exo);
  double exo_wedge = 0;
  for (const auto& adj : sx.adjoints)
    for (int a = 0; a < exo.N(); ++a)
      exo_wedge = std::max({exo_wedge, max_abs(adj.Vbar[a]), max_abs(adj.V_kernel.row(a))});
  const double rel_full = full / full_scale, rel_obs = obs / obs_scale;
  o.note << "rel |H^X - S X| " << rel_full << " (on observed directions " << rel_obs
         << "), single-player wedge " << wedge << ", exogenous-signal wedge " << exo_wedge;
  o.require(rel_full <= 1e-3, "H^X = S X within 1e-3");
  o.require(wedge == 0.0, "single-player wedge identically zero");
  o.require(sx.converged && exo_wedge <= 1e-14, "exogenous-signal wedge zero");
}

// 4
void target_invariance(Outcome& o) {
  const double targets[3][2] = {{1, -1}, {2, -2}, {0, 0}};
  std::vector<EquilibriumSolution> sols;
  GameSpec spec;
  for (const auto& t : targets) {
    ScenarioParams q = benchmark();
    q.target1 = t[0];
    q.target2 = t[1];
    spec = build_scenario(q);
    SolverConfig cfg;
    sols.push_back(picard_solve(spec, cfg));
  }
  double worst = 0, mean_change = 0;
  for (size_t s = 1; s < sols.size(); ++s) {
    const auto &a = sols[0], &b = sols[s];
    worst = std::max(worst, kernel_diff(a.env.X, b.env.X));
    for (int i = 0; i < spec.n(); ++i) {
      worst = std::max(worst, kernel_diff(a.env.filters[i].Xtilde, b.env.filters[i].Xtilde));
      for (int k = 0; k < spec.N(); ++k)
        worst = std::max(worst, max_abs(a.env.filters[i].slice(k).mat() -
                                        b.env.filters[i].slice(k).mat()));
      worst = std::max(worst, kernel_diff(a.profile.D[i], b.profile.D[i]));
      worst = std::max(worst, kernel_diff(a.adjoints[i].H_X, b.adjoints[i].H_X));
      worst = std::max(worst, kernel_diff(a.adjoints[i].V_kernel, b.adjoints[i].V_kernel));
      for (int k = 0; k < spec.N(); ++k)
        mean_change = std::max(mean_change,
                               max_abs(a.profile.Dbar[i][k] - b.profile.Dbar[i][k]));
    }
  }
  o.note << "max kernel difference " << worst << ", max mean-action change " << mean_change;
  o.require(worst <= 1e-12, "kernels equal within 1e-12");
  o.require(mean_change > 0.0, "mean paths respond to targets");
}

// 5
void symmetry(Outcome& o) {
  const GameSpec spec = build_scenario(benchmark());
  const auto sol = picard_solve(spec);
  const int N = spec.N();
  double xb = 0, ds = 0, vs = 0, peak = 0, vT = 0;
  int arg = 0;
  for (int a = 0; a < N; ++a) {
    xb = std::max(xb, max_abs(sol.env.Xbar[a]));
    ds = std::max(ds, max_abs(sol.profile.Dbar[0][a] + sol.profile.Dbar[1][a]));
    vs = std::max(vs, max_abs(sol.adjoints[0].Vbar[a] + sol.adjoints[1].Vbar[a]));
  }
  for (const auto& adj : sol.adjoints) {
    vT = std::max({vT, max_abs(adj.Vbar[N - 1]), max_abs(adj.V_kernel.row(N - 1))});
    for (int a = 0; a < N; ++a)
      if (adj.Vbar[a].norm() > peak) peak = adj.Vbar[a].norm(), arg = a;
  }
  o.note << "|Xbar| " << xb << ", |D1+D2| " << ds << ", |V1+V2| " << vs << ", wedge at T " << vT
         << ", peak " << peak << " at t=" << spec.grid.t(arg);
  o.require(xb <= 1e-10, "|Xbar| <= 1e-10");
  o.require(ds <= 1e-10, "|D1 + D2| <= 1e-10");
  o.require(vs <= 1e-8, "|V1 + V2| <= 1e-8");
  o.require(vT <= 1e-14, "wedge zero at T");
  o.require(arg > 0 && arg < N - 1 && peak > 0, "interior wedge peak");
}

// 6
void pooling(Outcome& o) {
  const auto rows = pooling_comparison(benchmark(), {1, 2, 3, 4, 5}, SolverConfig{});
  double comp = 0, coop = 0, min_gain = INFINITY;
  bool conv = true;
  for (const auto& r : rows) {
    (r.mode == "competitive" ? comp : coop) += r.gain;
    min_gain = std::min(min_gain, r.gain);
    conv = conv && r.converged;
  }
  o.note << "competitive gain " << comp << ", cooperative gain " << coop << ", ratio "
         << comp / coop << ", smallest gain " << min_gain;
  o.require(conv, "all solves converged");
  o.require(min_gain > 0.0, "Pareto improvement");
  o.require(comp >= 5.0 * coop, "ratio >= 5");
}

// 7
void starvation(Outcome& o) {
  ScenarioParams q = benchmark();
  q.sigma = 0.5;
  q.r1 = 0.05;
  q.r2 = 0.2;
  const auto rep = precision_sweep(q, 20.0, {0, 10, 20}, SolverConfig{});
  const double effort_ratio = rep.cells[2].total_effort / rep.cells[0].total_effort;
  const double energy_ratio = rep.cells[2].energy[1] / rep.cells[1].energy[1];

  q.r1 = q.r2 = 0.1;
  const std::vector<double> splits = {0, 5, 10, 15, 20};
  const auto sym = precision_sweep(q, 20.0, splits, SolverConfig{});
  double asym = 0;
  bool conv = true;
  const int K = int(splits.size());
  for (int s = 0; s < K; ++s) {
    const auto &c = sym.cells[s], &r = sym.cells[K - 1 - s];
    conv = conv && c.converged;
    for (int i = 0; i < 2; ++i) {
      asym = std::max({asym, std::abs(c.cost[i] - r.cost[1 - i]),
                       std::abs(c.energy[i] - r.energy[1 - i]),
                       std::abs(c.wedge_max[i] - r.wedge_max[1 - i]),
                       std::abs(c.ce_energy[i] - r.ce_energy[1 - i])});
    }
    asym = std::max({asym, std::abs(c.total_effort - r.total_effort),
                     std::abs(c.mean_state_T + r.mean_state_T),
                     std::abs(c.ce_total_effort - r.ce_total_effort)});
  }
  for (const auto& c : rep.cells) conv = conv && c.converged;
  o.note << "effort ratio " << effort_ratio << ", starved energy ratio " << energy_ratio
         << ", reflection asymmetry " << asym;
  o.require(conv, "all solves converged");
  o.require(effort_ratio <= 0.6, "effort ratio <= 0.6");
  o.require(energy_ratio <= 0.1, "energy ratio <= 0.1");
  o.require(asym <= 1e-6, "reflection symmetry");
}

// Fixed linear profile with decaying kernels.
StrategyProfile test_profile(const GameSpec& spec) {
  StrategyProfile p = zero_profile(spec);
  const double dt = spec.grid.dt;
  Mat base(1, 3);
  base << -0.8, 0.4, -0.3;
  for (int k = 0; k < spec.n(); ++k)
    for (int a = 0; a < spec.N(); ++a) {
      p.Dbar[k][a].setConstant(k == 0 ? 0.3 : -0.3);
      for (int b = 0; b <= a; ++b) p.D[k].at(a, b) = base * std::exp(-dt * (a - b)) * (1 + 0.5 * k);
    }
  return p;
}

struct FilterProbe {
  double error = 0, asym = 0, dissip = -INFINITY, min_eig = 0;
};

FilterProbe probe_filter(int N) {
  ScenarioParams q = benchmark();
  q.p1 = 3;
  q.p2 = 2;
  q.N = N;
  const GameSpec spec = build_scenario(q);
  const StrategyProfile prof = test_profile(spec);
  ForwardOptions fo;
  fo.retain_slices = true;
  const ForwardEnv env = forward_closure(spec, prof, fo);
  const double dt = spec.grid.dt;
  FilterProbe out;
  for (int i = 0; i < spec.n(); ++i) {
    const auto& f = env.filters[i];
    for (int a = 0; a < N; ++a) {
      out.error = std::max(out.error, exact_discrete_projection(spec, prof, env, i, a).max_abs_error());
      const Mat& F = f.slice(a).mat();
      out.asym = std::max(out.asym, max_abs(F - F.transpose()));
      const Vec w = expand_weights(trapezoid_weights(a + 1, dt), spec.m());
      const double nt = (f.Xtilde.row(a) * w.asDiagonal() * f.Xtilde.row(a).transpose()).trace();
      const double nx = (env.X.row(a) * w.asDiagonal() * env.X.row(a).transpose()).trace();
      out.dissip = std::max(out.dissip, nt - nx);
      if (a + 1 < N) {
        const int len = int(F.rows());
        const Mat inc = f.slice(a + 1).mat().topLeftCorner(len, len) - F;
        out.min_eig = std::min(out.min_eig, Eigen::SelfAdjointEigenSolver<Mat>(
                                                0.5 * (inc + inc.transpose()))
                                                .eigenvalues()
                                                .minCoeff());
      }
    }
  }
  return out;
}

// 8
void filtering_oracle(Outcome& o) {
  constexpr double C = 2.0;
  const FilterProbe p10 = probe_filter(10), p20 = probe_filter(20);
  const double dt10 = 1.0 / 9.0;
  o.note << "projection error N=10 " << p10.error << " (C dt = " << C * dt10 << "), N=20 "
         << p20.error << ", ratio " << p20.error / p10.error << ", |F - F^T| "
         << std::max(p10.asym, p20.asym) << ", dissipation " << std::max(p10.dissip, p20.dissip)
         << ", min increment eigenvalue " << std::min(p10.min_eig, p20.min_eig);
  o.require(p10.error <= C * dt10, "error <= C dt");
  o.require(p20.error <= 0.6 * p10.error, "error halves");
  o.require(std::max(p10.asym, p20.asym) <= 1e-14, "self-adjoint");
  o.require(std::max(p10.dissip, p20.dissip) <= 1e-12, "dissipation");
  o.require(std::min(p10.min_eig, p20.min_eig) >= -1e-10, "PSD increments");
}

// 9
void cost_oracle(Outcome& o) {
  const GameSpec spec = build_scenario(benchmark());
  const auto sol = picard_solve(spec);
  SimulationOptions so;
  so.threads = 4;
  const auto ens = simulate_closed_loop(spec, sol.profile, 20000, 1, so);
  double z_cost = 0, z_var = 0;
  for (int i = 0; i < spec.n(); ++i) {
    const auto mc = monte_carlo_cost(ens, spec, i);
    const double J = expected_cost(spec, sol.env, sol.profile, i).J;
    z_cost = std::max(z_cost, std::abs(mc.estimate - J) / mc.stderr_);
    const auto var = empirical_error_variance(ens, i);
    for (int a : {5, 10, 20, 30, 39}) {
      const double S = sol.env.filters[i].Sigma_XX[a](0, 0);
      z_var = std::max(z_var, std::abs(var[a](0) - S) / (S * std::sqrt(2.0 / (ens.M - 1))));
    }
  }
  o.note << "cost z " << z_cost << ", error variance z " << z_var;
  o.require(z_cost <= 3.0, "cost within 3 SE");
  o.require(z_var <= 3.0, "error variance within CLT band");
}

// 10
void stationarity(Outcome& o) {
  std::vector<ScenarioParams> cases = {benchmark()};
  ScenarioParams asym = benchmark();
  asym.p2 = 1;
  asym.r1 = 0.05;
  asym.r2 = 0.2;
  cases.push_back(asym);
  ScenarioParams pooled = benchmark();
  pooled.mode = Mode::PooledCompetitive;
  cases.push_back(pooled);
  double worst = 0, lowest = INFINITY;
  bool conv = true;
  for (const auto& q : cases) {
    const GameSpec spec = build_scenario(q);
    const auto sol = picard_solve(spec);
    conv = conv && sol.converged;
    const int N = spec.N();
    for (int i = 0; i < spec.n(); ++i) {
      const double J = expected_cost(spec, sol.env, sol.profile, i).J;
      for (int t0 : {0, N / 4, N / 2, 3 * N / 4, N - 2}) {
        worst = std::max(worst, std::abs(mean_spike_sensitivity(spec, sol, i, t0)) / (1 + std::abs(J)));
        for (double eps : {1e-3, -1e-3})
          lowest = std::min(lowest, unilateral_mean_deviation(spec, sol, i, t0, eps));
      }
    }
  }
  o.note << "max |dJ|/(1+|J|) " << worst << ", smallest deviation gain " << lowest;
  o.require(conv, "all solves converged");
  o.require(worst <= 1e-3, "spike stationarity");
  o.require(lowest >= 0.0, "no profitable deviation");
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"benchmark convergence", benchmark_convergence},
      {"Kalman-Bucy filter", kalman_bucy},
      {"single-player reduction", single_player},
      {"target invariance", target_invariance},
      {"symmetry", symmetry},
      {"pooling welfare", pooling},
      {"information starvation", starvation},
      {"filtering oracle", filtering_oracle},
      {"cost oracle", cost_oracle},
      {"stationarity", stationarity},
  };
  int failures = 0, k = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << " [exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", ++k, name, o.note.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", k - failures, k);
  return failures ? 1 : 0;
}
