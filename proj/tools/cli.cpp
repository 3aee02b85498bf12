#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lqg/analysis.hpp"
#include "lqg/oracle.hpp"

namespace lqg::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("scenario field '") + key + "' has the wrong type");
  }
}

std::vector<double> number_list(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) throw InputError(std::string("'") + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw InputError(std::string("'") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

json params_json(const ScenarioParams& p) {
  return {{"p1", p.p1},         {"p2", p.p2}, {"r1", p.r1},   {"r2", p.r2},
          {"target1", p.target1}, {"target2", p.target2}, {"x0", p.x0},
          {"T", p.T},           {"N", p.N},   {"sigma", p.sigma}, {"mode", mode_name(p.mode)}};
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("scenario must be a JSON object");
  static const char* known[] = {"p1", "p2",    "r1", "r2",    "target1", "target2", "x0",
                                "T",  "N",     "sigma", "mode", "p2_grid", "budget", "splits"};
  for (const auto& item : j.items())
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return item.key() == k; }) == std::end(known))
      throw InputError("unknown scenario field '" + item.key() + "'");

  Scenario s;
  auto& p = s.params;
  p.p1 = field(j, "p1", p.p1);
  p.p2 = field(j, "p2", p.p2);
  p.r1 = field(j, "r1", p.r1);
  p.r2 = field(j, "r2", p.r2);
  p.target1 = field(j, "target1", p.target1);
  p.target2 = field(j, "target2", p.target2);
  p.x0 = field(j, "x0", p.x0);
  p.T = field(j, "T", p.T);
  p.N = field(j, "N", p.N);
  p.sigma = field(j, "sigma", p.sigma);
  if (j.contains("mode")) {
    try {
      p.mode = parse_mode(field<std::string>(j, "mode", ""));
    } catch (const Error& e) {
      throw InputError(e.what());
    }
  }
  s.p2_grid = number_list(j, "p2_grid", s.p2_grid);
  s.budget = field(j, "budget", s.budget);
  s.splits = number_list(j, "splits", s.splits);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void write_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("write failed for '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, target);
}

namespace {

struct Options {
  std::string scenario;
  std::string out = ".";
  std::optional<double> tol, damping, init_scale;
  std::optional<int> max_iter, grid_n, threads;
  std::uint64_t seed = 1;
  int paths = 20000;
  bool retain = false;
};

struct Context {
  Options opt;
  Scenario scen;
  SolverConfig config;
  std::vector<std::string> written;

  std::string path(const std::string& name) const { return (fs::path(opt.out) / name).string(); }
  void emit(const std::string& name, const std::string& text) {
    write_atomic(path(name), text);
    written.push_back(name);
  }
};

GameSpec make_spec(const ScenarioParams& p) {
  try {
    GameSpec spec = build_scenario(p);
    validate_spec(spec);
    return spec;
  } catch (const Error& e) {
    throw InputError(e.what());
  }
}

std::ostringstream csv() {
  std::ostringstream os;
  os << std::setprecision(17);
  return os;
}

json config_json(const SolverConfig& c) {
  return {{"tol", c.tol},         {"max_iter", c.max_iter},   {"damping", c.damping},
          {"auto_damping", c.auto_damping}, {"norm", c.norm}, {"inner_tol", c.inner_tol},
          {"init_scale", c.init_scale}, {"seed", c.seed},    {"threads", c.threads}};
}

json solution_json(const GameSpec& spec, const EquilibriumSolution& sol) {
  json costs = json::array();
  for (int i = 0; i < spec.n(); ++i) {
    const auto c = expected_cost(spec, sol.env, sol.profile, i);
    costs.push_back({{"player", i + 1}, {"J", c.J}, {"tracking", c.tracking},
                     {"effort", c.effort}, {"constant", c.constant}});
  }
  return {{"converged", sol.converged},
          {"iterations", sol.iterations},
          {"final_residual", sol.residual_history.empty() ? 0.0 : sol.residual_history.back()},
          {"final_damping", sol.final_damping},
          {"residual_history", sol.residual_history},
          {"inner_iterations", sol.inner_iterations},
          {"costs", costs}};
}

void write_kernel(std::ostringstream& os, const TriKernel& K, const std::string& prefix,
                  const TimeGrid& grid) {
  for (int a = 0; a < K.N(); ++a)
    for (int b = 0; b <= a; ++b) {
      const Mat blk = K.at(a, b);
      for (int r = 0; r < blk.rows(); ++r)
        for (int c = 0; c < blk.cols(); ++c)
          os << prefix << grid.t(a) << ',' << grid.t(b) << ',' << r << ',' << c << ','
             << blk(r, c) << '\n';
    }
}

int cmd_solve(Context& ctx) {
  const GameSpec spec = make_spec(ctx.scen.params);
  const auto sol = picard_solve(spec, ctx.config);
  const auto& g = spec.grid;

  auto res = csv();
  res << "iteration,residual,inner_iterations\n";
  for (size_t k = 0; k < sol.residual_history.size(); ++k)
    res << k + 1 << ',' << sol.residual_history[k] << ','
        << (k < sol.inner_iterations.size() ? sol.inner_iterations[k] : 0) << '\n';
  ctx.emit("residuals.csv", res.str());

  auto mean = csv();
  mean << "t,player,coord,Dbar,Xbar,Vbar,Hbar_X\n";
  for (int i = 0; i < spec.n(); ++i)
    for (int a = 0; a < spec.N(); ++a)
      for (int c = 0; c < spec.d(); ++c)
        mean << g.t(a) << ',' << i + 1 << ',' << c << ',' << sol.profile.Dbar[i][a](c) << ','
             << sol.env.Xbar[a](c) << ',' << sol.adjoints[i].Vbar[a](c) << ','
             << sol.adjoints[i].Hbar_X[a](c) << '\n';
  ctx.emit("mean_paths.csv", mean.str());

  auto pol = csv();
  pol << "player,t,u,row,col,value\n";
  for (int i = 0; i < spec.n(); ++i) write_kernel(pol, sol.profile.D[i], std::to_string(i + 1) + ",", g);
  ctx.emit("policy_kernel.csv", pol.str());

  auto st = csv();
  st << "t,u,row,col,value\n";
  write_kernel(st, sol.env.X, "", g);
  ctx.emit("state_kernel.csv", st.str());

  auto wk = csv();
  wk << "player,t,u,row,col,value\n";
  for (int i = 0; i < spec.n(); ++i)
    write_kernel(wk, sol.adjoints[i].V_kernel, std::to_string(i + 1) + ",", g);
  ctx.emit("wedge_kernel.csv", wk.str());

  auto fk = csv();
  fk << "player,t,u,s,row,col,value\n";
  for (int i = 0; i < spec.n(); ++i) {
    const auto& f = sol.env.filters[i];
    const int first = ctx.opt.retain ? 0 : spec.N() - 1;
    for (int a = first; a < spec.N(); ++a) {
      const SliceKernel& F = f.slice(a);
      for (int u = 0; u <= a; ++u)
        for (int s = 0; s <= a; ++s) {
          const Mat blk = F.at(u, s);
          for (int r = 0; r < blk.rows(); ++r)
            for (int c = 0; c < blk.cols(); ++c)
              fk << i + 1 << ',' << g.t(a) << ',' << g.t(u) << ',' << g.t(s) << ',' << r << ','
                 << c << ',' << blk(r, c) << '\n';
        }
    }
  }
  ctx.emit("filter_kernel.csv", fk.str());

  json j = {{"command", "solve"},
            {"scenario", params_json(ctx.scen.params)},
            {"config", config_json(ctx.config)},
            {"solution", solution_json(spec, sol)}};
  j["files"] = ctx.written;
  ctx.emit("solution.json", j.dump(2) + "\n");
  std::cout << (sol.converged ? "converged" : "not converged") << " after " << sol.iterations
            << " iterations, residual "
            << (sol.residual_history.empty() ? 0.0 : sol.residual_history.back()) << "\n";
  return sol.converged ? 0 : 1;
}

int cmd_pool(Context& ctx) {
  make_spec(ctx.scen.params);
  const auto rows = pooling_comparison(ctx.scen.params, ctx.scen.p2_grid, ctx.config);
  auto os = csv();
  os << "p2,player,private_cost,pooled_cost,gain,mode\n";
  double comp = 0, coop = 0;
  bool pareto = true, converged = true;
  for (const auto& r : rows) {
    os << r.p2 << ',' << r.player << ',' << r.private_cost << ',' << r.pooled_cost << ','
       << r.gain << ',' << r.mode << '\n';
    (r.mode == "competitive" ? comp : coop) += r.gain;
    pareto = pareto && r.gain > 0;
    converged = converged && r.converged;
  }
  ctx.emit("pooling.csv", os.str());
  json j = {{"command", "pool-compare"},
            {"scenario", params_json(ctx.scen.params)},
            {"p2_grid", ctx.scen.p2_grid},
            {"competitive_gain_total", comp},
            {"cooperative_gain_total", coop},
            {"gain_ratio", coop != 0 ? json(comp / coop) : json(nullptr)},
            {"pareto_improving", pareto},
            {"converged", converged}};
  j["files"] = ctx.written;
  ctx.emit("pooling.json", j.dump(2) + "\n");
  std::cout << "competitive gain " << comp << ", cooperative gain " << coop << "\n";
  return converged ? 0 : 1;
}

int cmd_sweep(Context& ctx) {
  make_spec(ctx.scen.params);
  SweepReport rep;
  try {
    rep = precision_sweep(ctx.scen.params, ctx.scen.budget, ctx.scen.splits, ctx.config);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  auto os = csv();
  os << "split,effort_1,effort_2,total_effort,mean_state_T,converged\n";
  auto det = csv();
  det << "split,p2_sq,cost_1,cost_2,wedge_max_1,wedge_max_2,ce_effort_1,ce_effort_2,"
         "ce_total_effort,iterations\n";
  bool converged = true;
  for (const auto& c : rep.cells) {
    os << c.p1_sq << ',' << c.energy[0] << ',' << c.energy[1] << ',' << c.total_effort << ','
       << c.mean_state_T << ',' << (c.converged ? 1 : 0) << '\n';
    det << c.p1_sq << ',' << c.p2_sq << ',' << c.cost[0] << ',' << c.cost[1] << ','
        << c.wedge_max[0] << ',' << c.wedge_max[1] << ',' << c.ce_energy[0] << ','
        << c.ce_energy[1] << ',' << c.ce_total_effort << ',' << c.iterations << '\n';
    converged = converged && c.converged;
  }
  ctx.emit("sweep.csv", os.str());
  ctx.emit("sweep_detail.csv", det.str());
  json j = {{"command", "precision-sweep"},
            {"scenario", params_json(ctx.scen.params)},
            {"budget", rep.budget},
            {"splits", ctx.scen.splits},
            {"converged", converged}};
  j["files"] = ctx.written;
  ctx.emit("sweep.json", j.dump(2) + "\n");
  return converged ? 0 : 1;
}

int cmd_wedges(Context& ctx) {
  make_spec(ctx.scen.params);
  auto os = csv();
  os << "p2,t,player,coord,Vbar,Dbar,Xbar\n";
  json summary = json::array();
  bool converged = true;
  for (double p2 : ctx.scen.p2_grid) {
    ScenarioParams q = ctx.scen.params;
    q.p2 = p2;
    const GameSpec spec = make_spec(q);
    const auto sol = picard_solve(spec, ctx.config);
    converged = converged && sol.converged;
    json row = {{"p2", p2}, {"converged", sol.converged}};
    json peaks = json::array();
    for (int i = 0; i < spec.n(); ++i) {
      double best = 0.0, t_best = 0.0;
      for (int a = 0; a < spec.N(); ++a) {
        const Vec& v = sol.adjoints[i].Vbar[a];
        if (v.norm() > best) best = v.norm(), t_best = spec.grid.t(a);
        for (int c = 0; c < spec.d(); ++c)
          os << p2 << ',' << spec.grid.t(a) << ',' << i + 1 << ',' << c << ',' << v(c) << ','
             << sol.profile.Dbar[i][a](c) << ',' << sol.env.Xbar[a](c) << '\n';
      }
      peaks.push_back({{"player", i + 1}, {"max_abs", best}, {"t_max", t_best}});
    }
    row["peaks"] = peaks;
    summary.push_back(row);
  }
  ctx.emit("wedges.csv", os.str());
  json j = {{"command", "wedge-export"},
            {"scenario", params_json(ctx.scen.params)},
            {"runs", summary},
            {"converged", converged}};
  j["files"] = ctx.written;
  ctx.emit("wedges.json", j.dump(2) + "\n");
  return converged ? 0 : 1;
}

struct Check {
  std::string name;
  bool passed;
  double measured;
  double tolerance;
  std::string detail;
};

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"measured", c.measured},
                   {"tolerance", c.tolerance},
                   {"detail", c.detail}});
  return arr;
}

int report_checks(Context& ctx, const std::string& file, json j, const std::vector<Check>& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.passed;
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.measured << " (tol "
              << c.tolerance << ")" << (c.detail.empty() ? "" : " " + c.detail) << "\n";
  }
  j["checks"] = checks_json(checks);
  j["passed"] = ok;
  j["files"] = ctx.written;
  j["files"].push_back(file);
  ctx.emit(file, j.dump(2) + "\n");
  return ok ? 0 : 1;
}

int cmd_riccati(Context& ctx) {
  ScenarioParams q = ctx.scen.params;
  q.mode = Mode::SinglePlayer;
  const GameSpec spec = make_spec(q);
  const auto sol = picard_solve(spec, ctx.config);
  const auto ric = riccati_single_player(spec);
  const int N = spec.N();
  const double dt = spec.grid.dt;
  const auto& f = sol.env.filters[0];

  double full = 0, full_scale = 0, obs = 0, obs_scale = 0, mean = 0, mean_scale = 0, wedge = 0;
  auto os = csv();
  os << "t,coord,Xbar,Hbar_X,riccati_Hbar_X\n";
  for (int a = 0; a < N; ++a) {
    const Mat& H = sol.adjoints[0].H_X.row(a);
    const Mat SX = ric.S[a] * sol.env.X.row(a);
    full = std::max(full, (H - SX).cwiseAbs().maxCoeff());
    full_scale = std::max(full_scale, H.cwiseAbs().maxCoeff());
    const Mat Hp = primitive_noise_control(H, f.slice(a), spec.layout, f.block, dt);
    const Mat Sp = primitive_noise_control(SX, f.slice(a), spec.layout, f.block, dt);
    obs = std::max(obs, (Hp - Sp).cwiseAbs().maxCoeff());
    obs_scale = std::max(obs_scale, Hp.cwiseAbs().maxCoeff());
    const Vec ref = ric.S[a] * sol.env.Xbar[a] + ric.s[a];
    mean = std::max(mean, (sol.adjoints[0].Hbar_X[a] - ref).cwiseAbs().maxCoeff());
    mean_scale = std::max(mean_scale, ref.cwiseAbs().maxCoeff());
    wedge = std::max({wedge, sol.adjoints[0].Vbar[a].cwiseAbs().maxCoeff(),
                      sol.adjoints[0].V_kernel.row(a).cwiseAbs().maxCoeff()});
    for (int c = 0; c < spec.d(); ++c)
      os << spec.grid.t(a) << ',' << c << ',' << sol.env.Xbar[a](c) << ','
         << sol.adjoints[0].Hbar_X[a](c) << ',' << ref(c) << '\n';
  }
  ctx.emit("riccati_paths.csv", os.str());
  auto rel = [](double e, double s) { return s > 0 ? e / s : e; };
  std::vector<Check> checks = {
      {"converged", sol.converged, sol.residual_history.empty() ? 0.0 : sol.residual_history.back(),
       ctx.config.tol, ""},
      {"kernel_costate_identity", rel(full, full_scale) <= 1e-3, rel(full, full_scale), 1e-3,
       "max |H^X - S X| / max |H^X| over the full shock kernel"},
      {"observed_kernel_costate_identity", rel(obs, obs_scale) <= 1e-3, rel(obs, obs_scale), 1e-3,
       "same, after projecting onto the player's information"},
      {"mean_costate_identity", rel(mean, mean_scale) <= 1e-3, rel(mean, mean_scale), 1e-3,
       "max |Hbar^X - (S Xbar + s)| / max |S Xbar + s|"},
      {"wedge_zero", wedge == 0.0, wedge, 0.0, "max |Vbar|, |V| with no opponents"}};
  json j = {{"command", "riccati-check"}, {"scenario", params_json(q)},
            {"config", config_json(ctx.config)}};
  return report_checks(ctx, "riccati.json", j, checks);
}

std::vector<int> sample_nodes(int N) {
  std::vector<int> out = {0, N / 4, N / 2, (3 * N) / 4, N - 2};
  for (auto& a : out) a = std::clamp(a, 0, N - 1);
  return out;
}

int cmd_validate(Context& ctx) {
  const GameSpec spec = make_spec(ctx.scen.params);
  const auto sol = picard_solve(spec, ctx.config);
  const int N = spec.N(), n = spec.n(), d = spec.d();
  const double dt = spec.grid.dt;
  std::vector<Check> checks;
  const double last = sol.residual_history.empty() ? 0.0 : sol.residual_history.back();
  checks.push_back({"converged", sol.converged, last, ctx.config.tol, ""});

  {
    ForwardEnv env;
    const auto next = best_response_map(spec, sol.profile, ctx.config, env);
    const double r = policy_residual(next, sol.profile);
    checks.push_back({"fixed_point_certificate", r <= ctx.config.tol, r, ctx.config.tol,
                      "one more best-response step"});
  }

  {
    double worst = 0, worst_dev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double J = expected_cost(spec, sol.env, sol.profile, i).J;
      for (int t0 : sample_nodes(N)) {
        worst = std::max(worst, std::abs(mean_spike_sensitivity(spec, sol, i, t0)) / (1 + std::abs(J)));
        for (double eps : {1e-3, -1e-3})
          worst_dev = std::min(worst_dev, unilateral_mean_deviation(spec, sol, i, t0, eps));
      }
    }
    checks.push_back({"spike_stationarity", worst <= 1e-3, worst, 1e-3, "max |dJ| / (1 + |J|)"});
    checks.push_back({"unilateral_deviation", worst_dev >= 0.0, worst_dev, 0.0,
                      "smallest cost change under +-1e-3 mean deviations"});
  }

  {
    double asym = 0, dissip = -std::numeric_limits<double>::infinity(), min_eig = 0;
    for (int i = 0; i < n; ++i) {
      const auto& f = sol.env.filters[i];
      for (int a = 0; a < N; ++a) {
        const Mat& F = f.slice(a).mat();
        asym = std::max(asym, (F - F.transpose()).cwiseAbs().maxCoeff());
        const Vec w = expand_weights(trapezoid_weights(a + 1, dt), spec.m());
        const double nt = (f.Xtilde.row(a) * w.asDiagonal() * f.Xtilde.row(a).transpose()).trace();
        const double nx = (sol.env.X.row(a) * w.asDiagonal() * sol.env.X.row(a).transpose()).trace();
        dissip = std::max(dissip, nt - nx);
        if (a + 1 < N) {
          const int len = F.rows();
          const Mat inc = f.slice(a + 1).mat().topLeftCorner(len, len) - F;
          const Mat sym = 0.5 * (inc + inc.transpose());
          min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues().minCoeff());
        }
      }
    }
    checks.push_back({"filter_self_adjoint", asym <= 1e-14, asym, 1e-14, "max |F - F^T|"});
    checks.push_back({"filter_dissipation", dissip <= 1e-12, dissip, 1e-12,
                      "max of |X~|^2 - |X|^2 per node"});
    checks.push_back({"filter_increment_psd", min_eig >= -1e-10, min_eig, -1e-10,
                      "smallest eigenvalue of interior F increments"});
  }

  {
    double err[2] = {0, 0}, idem = 0;
    const int grids[2] = {10, 20};
    for (int g = 0; g < 2; ++g) {
      ScenarioParams q = ctx.scen.params;
      q.N = grids[g];
      const GameSpec coarse = make_spec(q);
      const auto cs = picard_solve(coarse, ctx.config);
      for (int i = 0; i < coarse.n(); ++i) {
        const auto tab = exact_discrete_projection(coarse, cs.profile, cs.env, i, q.N - 1);
        err[g] = std::max(err[g], tab.max_abs_error());
        const Mat& Q = tab.exact_full;
        idem = std::max(idem, (Q * Q - Q).cwiseAbs().maxCoeff());
      }
    }
    const double dt10 = ctx.scen.params.T / 9.0;
    checks.push_back({"filter_oracle_first_order", err[0] <= 2.0 * dt10, err[0], 2.0 * dt10,
                      "kernel vs exact conditioning at N=10, bound 2 dt"});
    checks.push_back({"filter_oracle_halving", err[1] <= 0.6 * err[0], err[1], 0.6 * err[0],
                      "same error at N=20"});
    checks.push_back({"projection_idempotent", idem <= 1e-10, idem, 1e-10, ""});
  }

  bool cost_terms_ok = true;
  for (int i = 0; i < n; ++i)
    cost_terms_ok = cost_terms_ok && spec.players[i].G_X_kernel.max_abs() == 0.0;
  if (cost_terms_ok) {
    SimulationOptions so;
    so.threads = ctx.config.threads;
    const auto ens = simulate_closed_loop(spec, sol.profile, ctx.opt.paths, ctx.opt.seed, so);
    double z_cost = 0, z_mean = 0, z_var = 0;
    for (int i = 0; i < n; ++i) {
      const auto mc = monte_carlo_cost(ens, spec, i);
      const double J = expected_cost(spec, sol.env, sol.profile, i).J;
      z_cost = std::max(z_cost, mc.stderr_ > 0 ? std::abs(mc.estimate - J) / mc.stderr_ : 0.0);
      const auto var = empirical_error_variance(ens, i);
      for (int a : sample_nodes(N)) {
        if (a == 0) a = 1;
        for (int c = 0; c < d; ++c) {
          const double S = sol.env.filters[i].Sigma_XX[a](c, c);
          const double band = S * std::sqrt(2.0 / (ens.M - 1));
          if (band > 0) z_var = std::max(z_var, std::abs(var[a](c) - S) / band);
        }
      }
    }
    for (int a : sample_nodes(N))
      for (int c = 0; c < d; ++c) {
        const auto col = ens.X.col(a * d + c);
        const double mu = col.mean();
        const double sd = std::sqrt((col.array() - mu).square().sum() / std::max(1, ens.M - 1));
        const double se = sd / std::sqrt(double(ens.M));
        const double diff = std::abs(mu - sol.env.Xbar[a](c));
        if (se > 0) z_mean = std::max(z_mean, diff / se);
        else z_mean = std::max(z_mean, diff == 0 ? 0.0 : INFINITY);
      }
    auto os = csv();
    os << "t,player,coord,mean_X,Xbar,error_variance,Sigma_XX\n";
    for (int i = 0; i < n; ++i) {
      const auto var = empirical_error_variance(ens, i);
      for (int a = 0; a < N; ++a)
        for (int c = 0; c < d; ++c)
          os << spec.grid.t(a) << ',' << i + 1 << ',' << c << ',' << ens.X.col(a * d + c).mean()
             << ',' << sol.env.Xbar[a](c) << ',' << var[a](c) << ','
             << sol.env.filters[i].Sigma_XX[a](c, c) << '\n';
    }
    ctx.emit("ensemble.csv", os.str());
    checks.push_back({"monte_carlo_cost", z_cost <= 3, z_cost, 3,
                      "|MC - expected_cost| in standard errors"});
    checks.push_back({"monte_carlo_mean_state", z_mean <= 3, z_mean, 3,
                      "|mean X - Xbar| in standard errors"});
    checks.push_back({"monte_carlo_error_variance", z_var <= 3, z_var, 3,
                      "|Var(X - Xhat) - Sigma_XX| in CLT standard errors"});
  }

  json j = {{"command", "validate"},
            {"scenario", params_json(ctx.scen.params)},
            {"config", config_json(ctx.config)},
            {"paths", ctx.opt.paths},
            {"seed", ctx.opt.seed}};
  return report_checks(ctx, "validation.json", j, checks);
}

}  // namespace

int run_command(int argc, char** argv) {
  CLI::App app{"Nash equilibria of linear-quadratic-Gaussian games with endogenous signals"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options opt;
  app.add_option("--scenario", opt.scenario, "Scenario JSON file (defaults to the benchmark)");
  app.add_option("--out", opt.out, "Output directory");
  app.add_option("--tol", opt.tol, "Picard residual threshold")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", opt.max_iter, "Picard iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--damping", opt.damping, "Relaxation factor in (0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--grid-n", opt.grid_n, "Grid size N")->check(CLI::Range(2, 100000));
  app.add_option("--seed", opt.seed, "Seed for simulation and random initialization");
  app.add_option("--paths", opt.paths, "Monte Carlo path count")->check(CLI::PositiveNumber);
  app.add_option("--threads", opt.threads, "Worker cap")->check(CLI::PositiveNumber);
  app.add_option("--init-scale", opt.init_scale, "Random initial profile scale (0 = zero start)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--retain-filter-slices", opt.retain, "Export every filter slice");

  const std::pair<const char*, const char*> names[] = {
      {"solve", "Solve for the equilibrium and export it"},
      {"pool-compare", "Private versus pooled signals over the p2 grid"},
      {"precision-sweep", "Precision allocation sweep under a fixed budget"},
      {"validate", "Run the oracle and invariant suite"},
      {"riccati-check", "Single-player reduction against the Riccati solution"},
      {"wedge-export", "Mean information wedges over the p2 grid"}};
  for (const auto& [name, help] : names) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (opt.damping && !(*opt.damping > 0.0)) {
    std::cerr << "error: --damping must lie in (0, 1]\n";
    return 2;
  }

  Context ctx;
  ctx.opt = opt;
  try {
    ctx.scen = opt.scenario.empty() ? Scenario{} : load_scenario(opt.scenario);
    if (opt.grid_n) ctx.scen.params.N = *opt.grid_n;
    auto& c = ctx.config;
    if (opt.tol) c.tol = *opt.tol;
    if (opt.max_iter) c.max_iter = *opt.max_iter;
    if (opt.damping) c.damping = *opt.damping;
    if (opt.init_scale) c.init_scale = *opt.init_scale;
    if (opt.threads) c.threads = *opt.threads;
    c.seed = opt.seed;
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (!fs::is_directory(opt.out)) throw InputError("cannot create output directory '" + opt.out + "'");

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "solve") return cmd_solve(ctx);
    if (cmd == "pool-compare") return cmd_pool(ctx);
    if (cmd == "precision-sweep") return cmd_sweep(ctx);
    if (cmd == "wedge-export") return cmd_wedges(ctx);
    if (cmd == "riccati-check") return cmd_riccati(ctx);
    return cmd_validate(ctx);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lqg::cli
