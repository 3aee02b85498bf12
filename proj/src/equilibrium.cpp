#include "lqg/equilibrium.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <thread>

#include <unsupported/Eigen/IterativeSolvers>

namespace lqg {
class AffineOperator;
}

namespace Eigen::internal {
template <>
struct traits<lqg::AffineOperator> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace lqg {

// Matrix-free operator for Eigen's Krylov solvers.
class AffineOperator : public Eigen::EigenBase<AffineOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum {
    ColsAtCompileTime = Eigen::Dynamic,
    MaxColsAtCompileTime = Eigen::Dynamic,
    IsRowMajor = false
  };

  AffineOperator(Eigen::Index size, std::function<Vec(const Vec&)> f)
      : size_(size), apply(std::move(f)) {}

  Eigen::Index rows() const { return size_; }
  Eigen::Index cols() const { return size_; }

  template <typename Rhs>
  Eigen::Product<AffineOperator, Rhs, Eigen::AliasFreeProduct> operator*(
      const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<AffineOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

 private:
  Eigen::Index size_;

 public:
  std::function<Vec(const Vec&)> apply;
};

}  // namespace lqg

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<lqg::AffineOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<lqg::AffineOperator, Rhs,
                                generic_product_impl<lqg::AffineOperator, Rhs>> {
  using Scalar = typename Product<lqg::AffineOperator, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const lqg::AffineOperator& lhs, const Rhs& rhs,
                            const Scalar& alpha) {
    dst.noalias() += alpha * lhs.apply(lqg::Vec(rhs));
  }
};
}  // namespace Eigen::internal

namespace lqg {

double policy_residual(const StrategyProfile& a, const StrategyProfile& b) {
  if (a.players() != b.players()) throw Error("policy_residual: player count mismatch");
  double out = 0.0;
  for (int i = 0; i < a.players(); ++i) {
    if (a.Dbar[i].size() != b.Dbar[i].size() || a.D[i].N() != b.D[i].N())
      throw Error("policy_residual: grid mismatch");
    double mean = 0.0, kern = 0.0;
    for (size_t t = 0; t < a.Dbar[i].size(); ++t)
      mean = std::max(mean, (a.Dbar[i][t] - b.Dbar[i][t]).norm());
    const int m = a.D[i].cols();
    for (int t = 0; t < a.D[i].N(); ++t)
      for (int u = 0; u <= t; ++u)
        kern = std::max(kern, (a.D[i].row(t).middleCols(u * m, m) -
                               b.D[i].row(t).middleCols(u * m, m)).norm());
    out = std::max(out, mean + kern);
  }
  return out;
}

namespace {

Eigen::Index packed_size(const GameSpec& spec) {
  const Eigen::Index N = spec.N(), d = spec.d(), m = spec.m();
  return spec.n() * (N * d + d * m * N * (N + 1) / 2);
}

Vec pack(const GameSpec& spec, const StrategyProfile& p) {
  Vec x(packed_size(spec));
  Eigen::Index o = 0;
  for (int i = 0; i < spec.n(); ++i) {
    for (const auto& v : p.Dbar[i]) {
      x.segment(o, v.size()) = v;
      o += v.size();
    }
    for (int a = 0; a < spec.N(); ++a) {
      const Mat& r = p.D[i].row(a);
      x.segment(o, r.size()) = Eigen::Map<const Vec>(r.data(), r.size());
      o += r.size();
    }
  }
  return x;
}

StrategyProfile unpack(const GameSpec& spec, const Vec& x) {
  StrategyProfile p = zero_profile(spec);
  Eigen::Index o = 0;
  for (int i = 0; i < spec.n(); ++i) {
    for (auto& v : p.Dbar[i]) {
      v = x.segment(o, v.size());
      o += v.size();
    }
    for (int a = 0; a < spec.N(); ++a) {
      Mat& r = p.D[i].row(a);
      Eigen::Map<Vec>(r.data(), r.size()) = x.segment(o, r.size());
      o += r.size();
    }
  }
  return p;
}

// Runs fn(i) for every player on up to `threads` workers.
template <class F>
void for_each_player(int n, int threads, F&& fn) {
  const int workers = std::clamp(threads, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

// Best responses to the costates generated by `trial` when every filter
// and costate coefficient is taken from `env` (built from `base`).
StrategyProfile respond_frozen(const GameSpec& spec, const ForwardEnv& env,
                               const StrategyProfile& base, const StrategyProfile& trial,
                               const SolverConfig& config) {
  const StatePaths paths = frozen_filter_closure(spec, env, trial);
  StrategyProfile out = zero_profile(spec);
  AdjointOptions opts;
  opts.forcing_Xbar = &paths.Xbar;
  opts.forcing_X = &paths.X;
  for_each_player(spec.n(), config.threads, [&](int i) {
    const AdjointSet adj = solve_adjoints(spec, env, base, i, opts);
    auto br = best_response(spec, adj, i);
    out.Dbar[i] = std::move(br.first);
    out.D[i] = std::move(br.second);
  });
  return out;
}

StrategyProfile blend(const StrategyProfile& a, const StrategyProfile& b, double w) {
  StrategyProfile out = a;
  for (int i = 0; i < a.players(); ++i) {
    for (size_t t = 0; t < a.Dbar[i].size(); ++t)
      out.Dbar[i][t] = (1.0 - w) * a.Dbar[i][t] + w * b.Dbar[i][t];
    for (int t = 0; t < a.D[i].N(); ++t)
      out.D[i].row(t) = (1.0 - w) * a.D[i].row(t) + w * b.D[i].row(t);
  }
  return out;
}

StrategyProfile random_profile(const GameSpec& spec, double scale, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(-scale, scale);
  StrategyProfile p = zero_profile(spec);
  for (int i = 0; i < spec.n(); ++i) {
    for (auto& v : p.Dbar[i])
      for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = U(gen);
    for (int a = 0; a < spec.N(); ++a) {
      Mat& r = p.D[i].row(a);
      for (Eigen::Index k = 0; k < r.size(); ++k) r.data()[k] = U(gen);
    }
  }
  return p;
}

void check_config(const SolverConfig& c) {
  if (!(c.tol > 0)) throw Error("solver tolerance must be positive");
  if (!(c.damping > 0 && c.damping <= 1)) throw Error("damping must lie in (0, 1]");
  if (c.max_iter < 1) throw Error("max_iter must be at least 1");
  if (c.norm != "linf") throw Error("unknown residual norm: " + c.norm);
}

}  // namespace

StrategyProfile best_response_map(const GameSpec& spec, const StrategyProfile& profile,
                                  const SolverConfig& config, ForwardEnv& env,
                                  int* inner_iterations) {
  ForwardOptions fo;
  fo.retain_slices = config.scheme == ResponseScheme::FrozenCoefficients;
  env = forward_closure(spec, profile, fo);
  if (inner_iterations) *inner_iterations = 0;

  if (config.scheme == ResponseScheme::SinglePass) {
    StrategyProfile out = zero_profile(spec);
    for_each_player(spec.n(), config.threads, [&](int i) {
      const AdjointSet adj = solve_adjoints(spec, env, profile, i);
      auto br = best_response(spec, adj, i);
      out.Dbar[i] = std::move(br.first);
      out.D[i] = std::move(br.second);
    });
    return out;
  }

  // The response is affine in the trial profile: solve x = c + L x.
  const Vec c = pack(spec, respond_frozen(spec, env, profile, zero_profile(spec), config));
  if (c.norm() == 0.0) return zero_profile(spec);
  AffineOperator op(c.size(), [&](const Vec& x) {
    const Vec Tx = pack(spec, respond_frozen(spec, env, profile, unpack(spec, x), config));
    return Vec(x - (Tx - c));
  });
  Eigen::GMRES<AffineOperator, Eigen::IdentityPreconditioner> gmres;
  gmres.compute(op);
  gmres.setTolerance(config.inner_tol);
  gmres.setMaxIterations(config.inner_max_iter);
  gmres.set_restart(80);
  const Vec x = gmres.solveWithGuess(c, pack(spec, profile));
  if (inner_iterations) *inner_iterations = int(gmres.iterations());
  return unpack(spec, x);
}

EquilibriumSolution picard_solve(const GameSpec& spec, const SolverConfig& config) {
  validate_spec(spec);
  check_config(config);
  EquilibriumSolution sol;
  StrategyProfile p = config.init_scale > 0 ? random_profile(spec, config.init_scale, config.seed)
                                            : zero_profile(spec);
  double omega = config.damping;
  for (int it = 0; it < config.max_iter; ++it) {
    ForwardEnv env;
    int inner = 0;
    StrategyProfile tp = best_response_map(spec, p, config, env, &inner);
    const double res = policy_residual(p, tp);
    sol.inner_iterations.push_back(inner);
    if (config.auto_damping && !sol.residual_history.empty() &&
        res > sol.residual_history.back())
      omega = std::max(omega * 0.5, std::min(config.damping, 0.125));
    sol.residual_history.push_back(res);
    sol.env = std::move(env);
    if (res <= config.tol || !std::isfinite(res) || it + 1 == config.max_iter) {
      sol.converged = res <= config.tol;
      break;
    }
    p = blend(p, tp, omega);
  }
  sol.iterations = int(sol.residual_history.size());
  sol.final_damping = omega;
  sol.profile = std::move(p);
  AdjointOptions opts;
  opts.keep_belief_kernels = config.keep_belief_kernels;
  sol.adjoints.resize(spec.n());
  for_each_player(spec.n(), config.threads, [&](int i) {
    sol.adjoints[i] = solve_adjoints(spec, sol.env, sol.profile, i, opts);
  });
  return sol;
}

namespace {

// Classical RK4 over [t0, t1] with linearly interpolated node coefficients.
template <class State, class F>
State rk4(State y, double t0, double t1, int steps, F&& rhs) {
  const double h = (t1 - t0) / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const State k1 = rhs(t, y);
    const State k2 = rhs(t + 0.5 * h, State(y + 0.5 * h * k1));
    const State k3 = rhs(t + 0.5 * h, State(y + 0.5 * h * k2));
    const State k4 = rhs(t + h, State(y + h * k3));
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

Mat interp(const std::vector<Mat>& path, double t, double dt) {
  const int N = int(path.size());
  double x = t / dt;
  int a = std::clamp(int(std::floor(x)), 0, N - 2);
  const double th = std::clamp(x - a, 0.0, 1.0);
  return (1.0 - th) * path[a] + th * path[a + 1];
}

std::vector<Mat> as_mats(const MeanPath& p) {
  std::vector<Mat> out;
  for (const auto& v : p) out.emplace_back(v);
  return out;
}

}  // namespace

RiccatiPaths riccati_single_player(const GameSpec& spec, int substeps) {
  if (spec.n() != 1) throw Error("riccati_single_player needs exactly one player");
  const int N = spec.N(), d = spec.d();
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[0];
  std::vector<Mat> BRB(N);
  for (int a = 0; a < N; ++a) BRB[a] = pl.B[a] * pl.G_DD[a].ldlt().solve(pl.B[a].transpose());
  const auto gbar = as_mats(pl.Gbar_X);

  // State packs [S | s] as a d x (d+1) matrix; integrate in reversed time.
  auto rhs = [&](double tau, const Mat& y) -> Mat {
    const double t = spec.grid.T - tau;
    const Mat A = interp(spec.A, t, dt), G = interp(pl.G_XX, t, dt);
    const Mat K = interp(BRB, t, dt), g = interp(gbar, t, dt);
    const Mat S = y.leftCols(d);
    const Mat s = y.rightCols(1);
    Mat out(d, d + 1);
    out.leftCols(d) = G + A.transpose() * S + S * A - S * K * S;
    out.rightCols(1) = g + (A - K * S).transpose() * s;
    return out;
  };
  RiccatiPaths out;
  out.S.assign(N, Mat::Zero(d, d));
  out.s = zero_path(N, d);
  Mat y(d, d + 1);
  y.leftCols(d) = pl.G_XX_T;
  y.rightCols(1) = pl.Gbar_X_T;
  out.S[N - 1] = y.leftCols(d);
  out.s[N - 1] = y.rightCols(1);
  for (int a = N - 1; a > 0; --a) {
    const double tau0 = spec.grid.T - a * dt;
    y = rk4(y, tau0, tau0 + dt, substeps, rhs);
    out.S[a - 1] = 0.5 * (y.leftCols(d) + y.leftCols(d).transpose());
    out.s[a - 1] = y.rightCols(1);
  }
  return out;
}

std::vector<Mat> kalman_bucy_cov(const GameSpec& spec, int player, int substeps) {
  if (player < 0 || player >= spec.n()) throw Error("kalman_bucy_cov: player out of range");
  const int N = spec.N(), d = spec.d();
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[player];
  std::vector<Mat> P(N);
  for (int a = 0; a < N; ++a) P[a] = pl.precision(a);
  auto rhs = [&](double t, const Mat& S) -> Mat {
    const Mat A = interp(spec.A, t, dt), V = interp(spec.Sigma, t, dt), Pt = interp(P, t, dt);
    return A * S + S * A.transpose() + V * V.transpose() - S * Pt * S;
  };
  std::vector<Mat> out(N, Mat::Zero(d, d));
  Mat S = Mat::Zero(d, d);
  for (int a = 0; a + 1 < N; ++a) {
    S = rk4(S, a * dt, (a + 1) * dt, substeps, rhs);
    out[a + 1] = 0.5 * (S + S.transpose());
  }
  return out;
}

MeanPath mean_deviation_response(const GameSpec& spec, const EquilibriumSolution& sol, int i,
                                 const MeanPath& du) {
  const int N = spec.N(), d = spec.d(), m = spec.m();
  const double dt = spec.grid.dt;
  if (int(du.size()) != N) throw Error("mean_deviation_response: path length mismatch");
  const auto& env = sol.env;
  MeanPath dX = zero_path(N, d);
  std::vector<Vec> dw(spec.n(), Vec::Zero(m * N));
  for (int a = 0; a + 1 < N; ++a) {
    const int len = m * (a + 1);
    const Vec wd = expand_weights(trapezoid_weights(a + 1, dt), m);
    Vec drift = spec.A[a] * dX[a] + spec.players[i].B[a] * du[a];
    for (int k = 0; k < spec.n(); ++k) {
      if (k == i) continue;
      const Vec ww = wd.cwiseProduct(dw[k].head(len));
      drift += spec.players[k].B[a] * (sol.profile.D[k].row(a) * ww);
      const Vec err = dX[a] - env.X.row(a) * ww;
      dw[k].head(len) +=
          dt * env.filters[k].Xtilde.row(a).transpose() * (spec.players[k].precision(a) * err);
    }
    dX[a + 1] = dX[a] + dt * drift;
  }
  return dX;
}

double mean_spike_sensitivity(const GameSpec& spec, const EquilibriumSolution& sol, int i,
                              int t0, const Vec& v_in) {
  const int N = spec.N(), d = spec.d();
  if (t0 < 0 || t0 >= N) throw Error("mean_spike_sensitivity: node off grid");
  if (i < 0 || i >= spec.n()) throw Error("mean_spike_sensitivity: player out of range");
  Vec v = v_in.size() ? v_in : Vec(Vec::Unit(d, 0));
  const auto& pl = spec.players[i];
  // Effort is integrated on the left nodes, so the last node carries none.
  if (t0 == N - 1) return 0.0;
  const double dt = spec.grid.dt;
  MeanPath du = zero_path(N, d);
  du[t0] = v / dt;
  const MeanPath dX = mean_deviation_response(spec, sol, i, du);
  const Vec wN = trapezoid_weights(N, dt);
  double dJ = 2.0 * v.dot(pl.G_DD[t0] * sol.profile.Dbar[i][t0]);
  for (int a = t0 + 1; a < N; ++a)
    dJ += 2.0 * wN(a) * dX[a].dot(pl.G_XX[a] * sol.env.Xbar[a] + pl.Gbar_X[a]);
  dJ += 2.0 * dX[N - 1].dot(pl.G_XX_T * sol.env.Xbar[N - 1] + pl.Gbar_X_T);
  return dJ;
}

}  // namespace lqg
