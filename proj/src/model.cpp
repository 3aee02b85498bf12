#include "lqg/model.hpp"

#include <cmath>
#include <sstream>

namespace lqg {

namespace {

template <class T>
void check_len(const std::vector<T>& v, int N, const std::string& what) {
  if (int(v.size()) != N) throw Error("path length mismatch: " + what);
}

void check_shape(const Mat& M, int r, int c, const std::string& what) {
  if (M.rows() != r || M.cols() != c) throw Error("shape mismatch: " + what);
}

double min_eig(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().minCoeff();
}

void require_finite(const Mat& M, const std::string& what) {
  if (!M.allFinite()) throw Error("non-finite entries in " + what);
}

}  // namespace

GameSpec blank_spec(const TimeGrid& grid, int n, int d) {
  GameSpec s;
  s.grid = grid;
  s.layout = BlockLayout(n, d);
  const int N = grid.N, m = s.layout.m;
  s.x0 = Vec::Zero(d);
  s.A.assign(N, Mat::Zero(d, d));
  s.Sigma.assign(N, Mat::Identity(d, d));
  s.players.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& p = s.players[i];
    p.block = i + 1;
    p.Gamma.assign(N, Mat::Zero(d, d));
    p.B.assign(N, Mat::Identity(d, d));
    p.G_XX.assign(N, Mat::Zero(d, d));
    p.Gbar_X = zero_path(N, d);
    p.G_X_kernel = TriKernel(N, d, m);
    p.G_const.assign(N, 0.0);
    p.G_DD.assign(N, Mat::Identity(d, d));
    p.G_XX_T = Mat::Zero(d, d);
    p.Gbar_X_T = Vec::Zero(d);
    p.G_X_kernel_T = Mat::Zero(d, m * N);
  }
  return s;
}

void validate_spec(const GameSpec& s) {
  const int N = s.grid.N, d = s.layout.d, m = s.layout.m;
  if (N < 2 || !(s.grid.dt > 0)) throw Error("invalid grid");
  if (s.layout.m != (s.layout.n + 1) * d) throw Error("layout: m must equal (n+1)d");
  if (int(s.players.size()) != s.layout.n) throw Error("player count does not match layout");
  check_shape(s.x0, d, 1, "x0");
  check_len(s.A, N, "A");
  check_len(s.Sigma, N, "Sigma");
  for (int a = 0; a < N; ++a) {
    check_shape(s.A[a], d, d, "A");
    check_shape(s.Sigma[a], d, d, "Sigma");
    require_finite(s.A[a], "A");
    require_finite(s.Sigma[a], "Sigma");
  }
  for (int i = 0; i < s.layout.n; ++i) {
    const auto& p = s.players[i];
    const std::string tag = "player " + std::to_string(i + 1) + ": ";
    if (p.block < 1 || p.block > s.layout.n) throw Error(tag + "observation block out of range");
    check_len(p.Gamma, N, tag + "Gamma");
    check_len(p.B, N, tag + "B");
    check_len(p.G_XX, N, tag + "G_XX");
    check_len(p.Gbar_X, N, tag + "Gbar_X");
    check_len(p.G_const, N, tag + "G_const");
    check_len(p.G_DD, N, tag + "G_DD");
    if (p.G_X_kernel.N() != N || p.G_X_kernel.rows() != d || p.G_X_kernel.cols() != m)
      throw Error(tag + "G_X kernel shape mismatch");
    for (int a = 0; a < N; ++a) {
      check_shape(p.Gamma[a], d, d, tag + "Gamma");
      check_shape(p.B[a], d, d, tag + "B");
      check_shape(p.G_XX[a], d, d, tag + "G_XX");
      check_shape(p.Gbar_X[a], d, 1, tag + "Gbar_X");
      check_shape(p.G_DD[a], d, d, tag + "G_DD");
      require_finite(p.Gamma[a], tag + "Gamma");
      require_finite(p.G_XX[a], tag + "G_XX");
      require_finite(p.G_DD[a], tag + "G_DD");
      if (min_eig(p.G_XX[a]) < -1e-12) throw Error(tag + "G_XX is not positive semidefinite");
      if (!((p.G_DD[a] - p.G_DD[a].transpose()).cwiseAbs().maxCoeff() <= 1e-12))
        throw Error(tag + "G_DD is not symmetric");
      if (!(min_eig(p.G_DD[a]) > 0.0)) throw Error(tag + "G_DD is not positive definite");
    }
    check_shape(p.G_XX_T, d, d, tag + "terminal G_XX");
    check_shape(p.Gbar_X_T, d, 1, tag + "terminal Gbar_X");
    check_shape(p.G_X_kernel_T, d, m * N, tag + "terminal G_X kernel");
    if (min_eig(p.G_XX_T) < -1e-12) throw Error(tag + "terminal G_XX is not positive semidefinite");
  }
}

Mode parse_mode(const std::string& s) {
  if (s == "private-competitive") return Mode::PrivateCompetitive;
  if (s == "private-cooperative") return Mode::PrivateCooperative;
  if (s == "pooled-competitive") return Mode::PooledCompetitive;
  if (s == "pooled-cooperative") return Mode::PooledCooperative;
  if (s == "single-player") return Mode::SinglePlayer;
  if (s == "zero-control-gain") return Mode::ZeroControlGain;
  throw Error("unknown mode: " + s);
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::PrivateCompetitive: return "private-competitive";
    case Mode::PrivateCooperative: return "private-cooperative";
    case Mode::PooledCompetitive: return "pooled-competitive";
    case Mode::PooledCooperative: return "pooled-cooperative";
    case Mode::SinglePlayer: return "single-player";
    case Mode::ZeroControlGain: return "zero-control-gain";
  }
  return "?";
}

namespace {

void check_params(const ScenarioParams& q) {
  if (q.p1 < 0 || q.p2 < 0) throw Error("negative precision");
  if (!(q.r1 > 0) || !(q.r2 > 0)) throw Error("effort weights must be positive");
  if (q.sigma < 0) throw Error("negative volatility");
}

void set_tracking(PlayerSpec& p, int N, double precision, double r, double target) {
  const double g = std::sqrt(precision);
  for (int a = 0; a < N; ++a) {
    p.Gamma[a].setConstant(g);
    p.G_XX[a].setConstant(1.0);
    p.Gbar_X[a].setConstant(-target);
    p.G_const[a] = target * target;
    p.G_DD[a].setConstant(r);
  }
}

bool cooperative(Mode m) {
  return m == Mode::PrivateCooperative || m == Mode::PooledCooperative;
}

GameSpec tracking_base(const ScenarioParams& q, bool pooled) {
  check_params(q);
  GameSpec s = blank_spec(make_grid(q.T, q.N), 2, 1);
  s.x0(0) = q.x0;
  for (auto& S : s.Sigma) S.setConstant(q.sigma);
  const double t1 = cooperative(q.mode) ? 0.0 : q.target1;
  const double t2 = cooperative(q.mode) ? 0.0 : q.target2;
  const double pp = q.p1 + q.p2;
  set_tracking(s.players[0], q.N, pooled ? pp : q.p1, q.r1, t1);
  set_tracking(s.players[1], q.N, pooled ? pp : q.p2, q.r2, t2);
  if (pooled) s.players[0].block = s.players[1].block = 1;
  return s;
}

}  // namespace

GameSpec build_two_player_tracking(const ScenarioParams& q) {
  if (q.mode != Mode::PrivateCompetitive && q.mode != Mode::PrivateCooperative)
    throw Error("two-player builder needs a private mode");
  GameSpec s = tracking_base(q, false);
  validate_spec(s);
  return s;
}

GameSpec build_pooled(const ScenarioParams& q) {
  if (q.mode != Mode::PooledCompetitive && q.mode != Mode::PooledCooperative)
    throw Error("pooled builder needs a pooled mode");
  GameSpec s = tracking_base(q, true);
  validate_spec(s);
  return s;
}

GameSpec build_single_player(const ScenarioParams& q) {
  if (q.mode != Mode::SinglePlayer && q.mode != Mode::ZeroControlGain)
    throw Error("single-player builder needs single-player or zero-control-gain mode");
  check_params(q);
  GameSpec s = blank_spec(make_grid(q.T, q.N), 1, 1);
  s.x0(0) = q.x0;
  for (auto& S : s.Sigma) S.setConstant(q.sigma);
  set_tracking(s.players[0], q.N, q.p1, q.r1, q.target1);
  if (q.mode == Mode::ZeroControlGain)
    for (auto& B : s.players[0].B) B.setZero();
  validate_spec(s);
  return s;
}

GameSpec build_scenario(const ScenarioParams& q) {
  switch (q.mode) {
    case Mode::PrivateCompetitive:
    case Mode::PrivateCooperative: return build_two_player_tracking(q);
    case Mode::PooledCompetitive:
    case Mode::PooledCooperative: return build_pooled(q);
    case Mode::SinglePlayer:
    case Mode::ZeroControlGain: return build_single_player(q);
  }
  throw Error("unreachable mode");
}

}  // namespace lqg
