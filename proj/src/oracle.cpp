#include "lqg/oracle.hpp"

#include <cmath>
#include <random>
#include <thread>

namespace lqg {

ProjectionTable exact_discrete_projection(const GameSpec& spec, const StrategyProfile& profile,
                                          const ForwardEnv& env, int player, int node) {
  check_profile(spec, profile);
  const int N = spec.N(), n = spec.n(), d = spec.d(), m = spec.m();
  if (player < 0 || player >= n) throw Error("exact_discrete_projection: player out of range");
  if (node < 0 || node >= N) throw Error("exact_discrete_projection: node off grid");
  if (N > 48) throw Error("exact_discrete_projection: grid too fine for dense conditioning");
  const double dt = spec.grid.dt;
  const int L = m * N;
  const Mat E0 = spec.layout.selector(0);

  // X_a - Xbar_a = M dW with every cell of variance dt.
  Mat M = Mat::Zero(d, L);
  M.middleCols(0, m) = spec.Sigma[0] * E0;
  std::vector<Mat> G(n);
  std::vector<Mat> Q(n, Mat::Zero(L, L));
  ProjectionTable out;
  out.player = player;
  out.node = node;
  for (int a = 0; a <= node; ++a) {
    for (int k = 0; k < n; ++k) {
      Mat g = spec.players[k].Gamma[a] * M * dt;
      g.middleCols(a * m, m) += spec.layout.selector(spec.players[k].block);
      G[k].conservativeResize(d * (a + 1), L);
      G[k].bottomRows(d) = g;
      const Mat GG = G[k] * G[k].transpose();
      Eigen::LDLT<Mat> ldlt(GG);
      if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0))
        throw Error("exact_discrete_projection: observation covariance is singular");
      Q[k] = G[k].transpose() * ldlt.solve(G[k]);
    }
    if (a == node) break;
    Mat drift = spec.A[a] * M;
    for (int k = 0; k < n; ++k) {
      Mat u = Mat::Zero(d, L);
      for (int b = 0; b <= a; ++b) u += profile.D[k].at(a, b) * Q[k].middleRows(b * m, m);
      drift += spec.players[k].B[a] * u;
    }
    M += dt * drift;
    M.middleCols((a + 1) * m, m) += spec.Sigma[a + 1] * E0;
  }
  const int len = m * (node + 1);
  out.exact_full = Q[player];
  out.exact = Q[player].topLeftCorner(len, len);

  const SliceKernel& F = env.filters[player].slice(node);
  const Vec w = expand_weights(trapezoid_weights(node + 1, dt), m);
  const Mat Pi = spec.layout.projector(spec.players[player].block);
  out.kernel = F.mat() * w.asDiagonal();
  for (int u = 0; u <= node; ++u) out.kernel.block(u * m, u * m, m, m) += Pi;
  return out;
}

DiscreteClosedLoop discrete_closed_loop(const GameSpec& spec, const StrategyProfile& profile,
                                        FilterRule rule) {
  check_profile(spec, profile);
  const int N = spec.N(), n = spec.n(), d = spec.d(), m = spec.m();
  const double dt = spec.grid.dt, s = std::sqrt(0.5 * dt);
  const int slots = 2 * N, L = slots * m;
  const bool kalman = rule == FilterRule::ExactKalman;
  const int E = kalman ? L : N * m;
  const Mat E0 = spec.layout.selector(0);
  auto left = [&](int b) { return (2 * b) * m; };
  auto right = [&](int b) { return (2 * b + 1) * m; };

  ForwardEnv env;
  if (!kalman) env = forward_closure(spec, profile);

  DiscreteClosedLoop out;
  out.rule = rule;
  out.slots = slots;
  out.Xbar = zero_path(N, d);
  out.M.assign(N, Mat::Zero(d, L));
  out.U.assign(n, std::vector<Mat>(N));
  out.obs.assign(n, std::vector<Mat>(N - 1));
  out.predict.assign(n, std::vector<Mat>(N - 1));
  out.gain.assign(n, std::vector<Mat>(N - 1));
  out.policy.assign(n, std::vector<Mat>(N));
  out.xhat.assign(n, std::vector<Mat>(N));
  out.err_cov.assign(n, std::vector<Mat>(N));

  // H maps xi to each player's estimate. Under ExactKalman the estimate is
  // E[xi | info] = (I - C) xi with C the conditional covariance.
  std::vector<Mat> H(n, Mat::Zero(E, L));
  std::vector<Mat> C(kalman ? n : 0, Mat::Identity(L, L));
  Vec xbar = spec.x0;
  for (int a = 0; a < N; ++a) {
    out.Xbar[a] = xbar;
    const Mat& M = out.M[a];
    for (int k = 0; k < n; ++k) {
      Mat R = Mat::Zero(d, E);
      if (kalman) {
        for (int b = 0; b <= a; ++b) {
          if (b > 0) R.middleCols(left(b), m) = s * profile.D[k].at(a, b);
          if (b < a) R.middleCols(right(b), m) = s * profile.D[k].at(a, b);
        }
        out.xhat[k][a] = M;
      } else {
        R.leftCols(m * (a + 1)) = profile.D[k].row(a);
        out.xhat[k][a] = Mat::Zero(d, E);
        out.xhat[k][a].leftCols(m * (a + 1)) = env.X.row(a);
      }
      out.policy[k][a] = R;
      out.U[k][a] = R * H[k];
      const Mat err = M - out.xhat[k][a] * H[k];
      out.err_cov[k][a] = err * err.transpose();
    }
    if (a + 1 == N) break;
    for (int k = 0; k < n; ++k) {
      const auto& pl = spec.players[k];
      const Mat Ek = spec.layout.selector(pl.block);
      Mat g = pl.Gamma[a] * M * dt;
      g.middleCols(right(a), m) += s * Ek;
      g.middleCols(left(a + 1), m) += s * Ek;
      Mat K;
      if (kalman) {
        const Mat Cg = C[k] * g.transpose();
        K = Cg * (g * Cg).ldlt().solve(Mat::Identity(d, d));
        C[k] -= K * Cg.transpose();
        out.predict[k][a] = g;
        H[k] = Mat::Identity(L, L) - C[k];
      } else {
        const Vec w = expand_weights(trapezoid_weights(a + 1, dt), m);
        K = Mat::Zero(E, d);
        K.topRows(m * (a + 1)) =
            w.asDiagonal() * (env.filters[k].Xtilde.row(a).transpose() * pl.Gamma[a].transpose());
        K.middleRows(a * m, m) += 0.5 * Ek.transpose();
        K.middleRows((a + 1) * m, m) += 0.5 * Ek.transpose();
        out.predict[k][a] = pl.Gamma[a] * out.xhat[k][a] * dt;
        H[k] += K * (g - out.predict[k][a] * H[k]);
      }
      out.obs[k][a] = g;
      out.gain[k][a] = K;
    }
    Mat drift = spec.A[a] * M;
    Vec mean_drift = spec.A[a] * xbar;
    for (int k = 0; k < n; ++k) {
      drift += spec.players[k].B[a] * out.U[k][a];
      mean_drift += spec.players[k].B[a] * profile.Dbar[k][a];
    }
    Mat& Mn = out.M[a + 1];
    Mn = M + dt * drift;
    Mn.middleCols(right(a), m) += s * spec.Sigma[a] * E0;
    Mn.middleCols(left(a + 1), m) += s * spec.Sigma[a + 1] * E0;
    xbar += dt * mean_drift;
  }
  return out;
}

namespace {

void require_no_cross_kernel(const GameSpec& spec, int i) {
  const auto& pl = spec.players[i];
  if (pl.G_X_kernel.max_abs() != 0.0 || (pl.G_X_kernel_T.size() && pl.G_X_kernel_T.cwiseAbs().maxCoeff() != 0.0))
    throw Error("simulated costs need a zero state-shock cost kernel");
}

}  // namespace

double discrete_expected_cost(const GameSpec& spec, const StrategyProfile& profile,
                              const DiscreteClosedLoop& loop, int i) {
  if (i < 0 || i >= spec.n()) throw Error("discrete_expected_cost: player out of range");
  require_no_cross_kernel(spec, i);
  const int N = spec.N();
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[i];
  const Vec wN = trapezoid_weights(N, dt);
  double J = 0.0;
  for (int a = 0; a < N; ++a) {
    const Vec& xb = loop.Xbar[a];
    const Mat cov = loop.M[a] * loop.M[a].transpose();
    J += wN(a) * (xb.dot(pl.G_XX[a] * xb) + (pl.G_XX[a] * cov).trace() +
                  2.0 * pl.Gbar_X[a].dot(xb) + pl.G_const[a]);
    if (a + 1 < N) {
      const Vec& db = profile.Dbar[i][a];
      const Mat& U = loop.U[i][a];
      J += dt * (db.dot(pl.G_DD[a] * db) + (pl.G_DD[a] * U * U.transpose()).trace());
    } else {
      J += xb.dot(pl.G_XX_T * xb) + (pl.G_XX_T * cov).trace() + 2.0 * pl.Gbar_X_T.dot(xb);
    }
  }
  return J;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Mat path_shocks(std::uint64_t seed, std::uint64_t path, int per_node, int nodes) {
  std::mt19937_64 gen(splitmix64(splitmix64(seed) ^ path));
  std::normal_distribution<double> z;
  Mat out(per_node, nodes);
  for (int a = 0; a < nodes; ++a)
    for (int r = 0; r < per_node; ++r) out(r, a) = z(gen);
  return out;
}

PathEnsemble simulate_closed_loop(const GameSpec& spec, const StrategyProfile& profile, int M,
                                  std::uint64_t seed, const SimulationOptions& opts) {
  if (M <= 0) throw Error("path count must be positive");
  const DiscreteClosedLoop loop = discrete_closed_loop(spec, profile, opts.rule);
  const int N = spec.N(), n = spec.n(), d = spec.d(), m = spec.m();
  const double dt = spec.grid.dt, s = std::sqrt(0.5 * dt);
  const int E = int(loop.policy[0][0].cols());
  const Mat E0 = spec.layout.selector(0);

  PathEnsemble ens;
  ens.M = M;
  ens.seed = seed;
  ens.N = N;
  ens.d = d;
  ens.X = Mat::Zero(M, N * d);
  ens.Xhat.assign(n, Mat::Zero(M, N * d));
  ens.U.assign(n, Mat::Zero(M, N * d));
  ens.Y.assign(n, Mat::Zero(M, N * d));

  std::vector<Mat> own(n), fund0(N);
  for (int k = 0; k < n; ++k) own[k] = s * spec.layout.selector(spec.players[k].block);
  for (int a = 0; a < N; ++a) fund0[a] = s * spec.Sigma[a] * E0;

  auto run = [&](int first, int last) {
    std::vector<Vec> est(n);
    std::vector<Vec> u(n);
    Vec x(d), dy(d), drift(d);
    for (int p = first; p < last; ++p) {
      const Mat z = path_shocks(seed, std::uint64_t(p), 2 * m, N - 1);
      x = spec.x0;
      for (auto& e : est) e = Vec::Zero(E);
      for (int a = 0; a < N; ++a) {
        ens.X.block(p, a * d, 1, d) = x.transpose();
        for (int k = 0; k < n; ++k) {
          u[k] = profile.Dbar[k][a] + loop.policy[k][a] * est[k];
          ens.U[k].block(p, a * d, 1, d) = u[k].transpose();
          ens.Xhat[k].block(p, a * d, 1, d) =
              (loop.Xbar[a] + loop.xhat[k][a] * est[k]).transpose();
        }
        if (a + 1 == N) break;
        const auto z1 = z.col(a).head(m);
        const auto z2 = z.col(a).tail(m);
        for (int k = 0; k < n; ++k) {
          const Mat& G = spec.players[k].Gamma[a];
          dy = G * x * dt + own[k] * (z1 + z2);
          ens.Y[k].block(p, a * d, 1, d) = dy.transpose();
          dy -= G * loop.Xbar[a] * dt + loop.predict[k][a] * est[k];
          est[k] += loop.gain[k][a] * dy;
        }
        drift = spec.A[a] * x;
        for (int k = 0; k < n; ++k) drift += spec.players[k].B[a] * u[k];
        x += dt * drift + fund0[a] * z1 + fund0[a + 1] * z2;
      }
    }
  };

  const int T = std::max(1, std::min(opts.threads, M));
  if (T == 1) {
    run(0, M);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < T; ++t)
      pool.emplace_back(run, int(std::int64_t(M) * t / T), int(std::int64_t(M) * (t + 1) / T));
    for (auto& th : pool) th.join();
  }
  return ens;
}

MonteCarloEstimate monte_carlo_cost(const PathEnsemble& ens, const GameSpec& spec, int i) {
  if (i < 0 || i >= spec.n()) throw Error("monte_carlo_cost: player out of range");
  if (ens.N != spec.N() || ens.d != spec.d() || int(ens.U.size()) != spec.n())
    throw Error("monte_carlo_cost: ensemble does not match the game");
  require_no_cross_kernel(spec, i);
  const int N = spec.N(), d = spec.d();
  const double dt = spec.grid.dt;
  const auto& pl = spec.players[i];
  const Vec wN = trapezoid_weights(N, dt);
  Vec cost = Vec::Zero(ens.M);
  for (int p = 0; p < ens.M; ++p) {
    double J = 0.0;
    for (int a = 0; a < N; ++a) {
      const Vec x = ens.X.block(p, a * d, 1, d).transpose();
      J += wN(a) * (x.dot(pl.G_XX[a] * x) + 2.0 * pl.Gbar_X[a].dot(x) + pl.G_const[a]);
      if (a + 1 < N) {
        const Vec u = ens.U[i].block(p, a * d, 1, d).transpose();
        J += dt * u.dot(pl.G_DD[a] * u);
      } else {
        J += x.dot(pl.G_XX_T * x) + 2.0 * pl.Gbar_X_T.dot(x);
      }
    }
    cost(p) = J;
  }
  MonteCarloEstimate out;
  out.estimate = cost.mean();
  if (ens.M > 1) {
    const double var = (cost.array() - out.estimate).square().sum() / (ens.M - 1);
    out.stderr_ = std::sqrt(var / ens.M);
  }
  return out;
}

std::vector<Vec> empirical_error_variance(const PathEnsemble& ens, int i) {
  if (i < 0 || i >= int(ens.Xhat.size())) throw Error("empirical_error_variance: bad player");
  const Mat err = ens.X - ens.Xhat[i];
  std::vector<Vec> out(ens.N);
  for (int a = 0; a < ens.N; ++a) {
    const Mat e = err.middleCols(a * ens.d, ens.d);
    const Vec mean = e.colwise().mean().transpose();
    out[a] = (e.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() /
             std::max(1, ens.M - 1);
  }
  return out;
}

}  // namespace lqg
