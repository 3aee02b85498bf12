#include "lqg/filtering.hpp"

namespace lqg {

const SliceKernel& FilterState::slice(int a) const {
  if (a == node) return F;
  if (!retain || a < 0 || a >= int(slices.size()))
    throw Error("filter slice " + std::to_string(a) + " not retained");
  return slices[a];
}

Mat unresolved_kernel(const Mat& X_row, const SliceKernel& F, const BlockLayout& layout,
                      int block, double dt) {
  const int count = int(X_row.cols() / layout.m);
  if (X_row.cols() != count * layout.m || F.count() != count)
    throw Error("unresolved_kernel: shape mismatch");
  const Vec w = expand_weights(trapezoid_weights(count, dt), layout.m);
  Mat out = X_row - block_project(X_row, layout, block);
  out.noalias() -= (X_row * w.asDiagonal()) * F.mat();
  return out;
}

Mat state_error_cov(const Mat& X_row, const Mat& Xtilde_row, int m, double dt) {
  if (X_row.rows() != Xtilde_row.rows() || X_row.cols() != Xtilde_row.cols())
    throw Error("state_error_cov: shape mismatch");
  const int count = int(X_row.cols() / m);
  const Vec w = expand_weights(trapezoid_weights(count, dt), m);
  const Mat S = X_row * w.asDiagonal() * Xtilde_row.transpose();
  return 0.5 * (S + S.transpose());
}

FilterState start_filter(int player, int block, const Mat& X_row0, const BlockLayout& layout,
                         int N, double dt, bool retain) {
  FilterState st;
  st.player = player;
  st.block = block;
  st.node = 0;
  st.F = SliceKernel(1, layout.m);
  st.Xtilde = TriKernel(N, layout.d, layout.m);
  st.Xtilde.row(0) = unresolved_kernel(X_row0, st.F, layout, block, dt);
  st.Sigma_XX.assign(N, Mat::Zero(layout.d, layout.d));
  st.Sigma_XX[0] = state_error_cov(X_row0, st.Xtilde.row(0), layout.m, dt);
  st.retain = retain;
  if (retain) st.slices.push_back(st.F);
  return st;
}

void advance_filter(FilterState& st, const Mat& X_next_row, const Mat& Gamma_t,
                    const Mat& Gamma_next, const BlockLayout& layout, double dt) {
  const int a = st.node;
  const int m = layout.m;
  if (a + 1 >= st.Xtilde.N()) throw Error("advance_filter: step past horizon");
  if (X_next_row.cols() != m * (a + 2)) throw Error("advance_filter: state row shape mismatch");

  const Mat& xt = st.Xtilde.row(a);
  const Mat P = Gamma_t.transpose() * Gamma_t;
  SliceKernel next(a + 2, m);
  next.mat().topLeftCorner(m * (a + 1), m * (a + 1)) =
      st.F.mat() + dt * xt.transpose() * P * xt;

  // The new column only meets the fundamental block of the new diagonal,
  // which every observation selector annihilates, so X~ on earlier columns
  // does not depend on it.
  Mat xt_next = unresolved_kernel(X_next_row, next, layout, st.block, dt);
  const Mat gain = Gamma_next.transpose() * layout.selector(st.block);  // d x m
  for (int u = 0; u <= a; ++u) {
    const Mat blk = xt_next.middleCols(u * m, m).transpose() * gain;
    next.at(u, a + 1) = blk;
    next.at(a + 1, u) = blk.transpose();
  }
  xt_next = unresolved_kernel(X_next_row, next, layout, st.block, dt);

  st.F = std::move(next);
  st.node = a + 1;
  st.Xtilde.row(a + 1) = xt_next;
  st.Sigma_XX[a + 1] = state_error_cov(X_next_row, xt_next, m, dt);
  if (st.retain) st.slices.push_back(st.F);
}

Mat explicit_filter_kernel(const TriKernel& Xt, const std::vector<Mat>& Gamma,
                           const BlockLayout& layout, int block, int a, int u, int s, double dt) {
  if (u < 0 || s < 0 || u > a || s > a || a >= Xt.N())
    throw Error("explicit_filter_kernel: index off the causal triangle");
  const int m = layout.m;
  const Mat E = layout.selector(block);
  Mat out = Mat::Zero(m, m);
  if (u < s) out += Xt.at(s, u).transpose() * Gamma[s].transpose() * E;
  if (s < u) out += E.transpose() * Gamma[u] * Xt.at(u, s);
  const int lo = std::max(u, s);
  const Vec w = trapezoid_weights(a - lo + 1, dt);
  for (int r = lo; r <= a; ++r) {
    const Mat P = Gamma[r].transpose() * Gamma[r];
    out += w(r - lo) * Xt.at(r, u).transpose() * P * Xt.at(r, s);
  }
  return out;
}

Mat conditional_cross_cov(const Mat& Xtilde_row, int u, int m, double dt) {
  const int count = int(Xtilde_row.cols() / m);
  if (u < 0 || u >= count) throw Error("conditional_cross_cov: u outside the slice");
  const Vec w = trapezoid_weights(u + 1, dt);
  Mat out = Mat::Zero(Xtilde_row.rows(), m);
  for (int b = 0; b <= u; ++b) out += w(b) * Xtilde_row.middleCols(b * m, m);
  return out;
}

}  // namespace lqg
