#include "lqg/core.hpp"

#include <cmath>

namespace lqg {

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(N);
  for (int k = 0; k < N; ++k) out[k] = t(k);
  out.back() = T;
  return out;
}

TimeGrid make_grid(double T, int N) {
  if (N < 2) throw Error("invalid grid: N must be at least 2");
  if (!(T > 0.0) || !std::isfinite(T)) throw Error("invalid grid: T must be positive");
  TimeGrid g;
  g.T = T;
  g.N = N;
  g.dt = T / (N - 1);
  return g;
}

BlockLayout::BlockLayout(int players, int dim) : n(players), d(dim), m((players + 1) * dim) {
  if (players < 1 || dim < 1) throw Error("layout needs n >= 1 and d >= 1");
}

void BlockLayout::check_block(int block) const {
  if (block < 0 || block > n) throw Error("block index out of range: " + std::to_string(block));
}

Mat BlockLayout::selector(int block) const {
  check_block(block);
  Mat e = Mat::Zero(d, m);
  e.middleCols(block * d, d).setIdentity();
  return e;
}

Mat BlockLayout::projector(int block) const {
  check_block(block);
  Mat p = Mat::Zero(m, m);
  p.block(block * d, block * d, d, d).setIdentity();
  return p;
}

Mat block_project(const Mat& v, const BlockLayout& layout, int block, bool cols) {
  layout.check_block(block);
  const int len = cols ? int(v.cols()) : int(v.rows());
  if (len % layout.m != 0) throw Error("block_project: noise axis is not a multiple of m");
  Mat out = Mat::Zero(v.rows(), v.cols());
  for (int off = 0; off < len; off += layout.m) {
    const int at = off + block * layout.d;
    if (cols)
      out.middleCols(at, layout.d) = v.middleCols(at, layout.d);
    else
      out.middleRows(at, layout.d) = v.middleRows(at, layout.d);
  }
  return out;
}

MeanPath zero_path(int N, int dim) { return MeanPath(N, Vec::Zero(dim)); }

TriKernel::TriKernel(int N, int rows, int cols) : N_(N), rows_(rows), cols_(cols), data_(N) {
  for (int a = 0; a < N; ++a) data_[a] = Mat::Zero(rows, cols * (a + 1));
}

Mat TriKernel::get(int a, int b) const {
  if (a < 0 || a >= N_ || b < 0 || b > a) return Mat::Zero(rows_, cols_);
  return at(a, b);
}

double TriKernel::max_abs() const {
  double v = 0.0;
  for (const auto& r : data_)
    if (r.size()) v = std::max(v, r.cwiseAbs().maxCoeff());
  return v;
}

void TriKernel::set_zero() {
  for (auto& r : data_) r.setZero();
}

Vec trapezoid_weights(int count, double dt) {
  if (count < 1) throw Error("trapezoid: empty sample sequence");
  Vec w = Vec::Constant(count, dt);
  if (count == 1) {
    w(0) = 0.0;
    return w;
  }
  w(0) *= 0.5;
  w(count - 1) *= 0.5;
  return w;
}

Mat trapezoid_integrate(const std::vector<Mat>& samples, double dt) {
  if (samples.empty()) throw Error("trapezoid: empty sample sequence");
  const Vec w = trapezoid_weights(int(samples.size()), dt);
  Mat acc = Mat::Zero(samples[0].rows(), samples[0].cols());
  for (size_t k = 0; k < samples.size(); ++k) acc += w(k) * samples[k];
  return acc;
}

Vec expand_weights(const Vec& w, int block) {
  Vec out(w.size() * block);
  for (int k = 0; k < w.size(); ++k) out.segment(k * block, block).setConstant(w(k));
  return out;
}

}  // namespace lqg
