#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lqg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimeGrid {
  double T = 0.0;
  int N = 0;
  double dt = 0.0;

  double t(int k) const { return k * dt; }
  std::vector<double> nodes() const;
};

TimeGrid make_grid(double T, int N);

// Noise layout: block 0 carries the fundamental shock, block i player i's
// observation noise. Each block has d coordinates, m = (n+1)d in total.
struct BlockLayout {
  int n = 0;
  int d = 0;
  int m = 0;

  BlockLayout() = default;
  BlockLayout(int players, int dim);

  Mat selector(int block) const;   // d x m
  Mat projector(int block) const;  // m x m
  void check_block(int block) const;
};

// Zeroes every block except `block` along the noise axis. `cols` selects
// whether the noise axis runs along columns (row vectors / d x m) or rows.
Mat block_project(const Mat& v, const BlockLayout& layout, int block,
                  bool cols = true);

// Per-node vectors, length N.
using MeanPath = std::vector<Vec>;

MeanPath zero_path(int N, int dim);

// Causal two-time kernel K(a, b), b <= a, each entry rows x cols.
// Row a is stored contiguously as a rows x cols(a+1) matrix.
class TriKernel {
 public:
  TriKernel() = default;
  TriKernel(int N, int rows, int cols);

  int N() const { return N_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Mat& row(int a) { return data_[a]; }
  const Mat& row(int a) const { return data_[a]; }

  auto at(int a, int b) { return data_[a].middleCols(b * cols_, cols_); }
  auto at(int a, int b) const {
    return data_[a].middleCols(b * cols_, cols_);
  }

  // Off the causal triangle reads return zero.
  Mat get(int a, int b) const;

  double max_abs() const;
  void set_zero();

 private:
  int N_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Mat> data_;
};

// Square m(a+1) x m(a+1) grid of m x m blocks at one time slice.
class SliceKernel {
 public:
  SliceKernel() = default;
  SliceKernel(int count, int m) : m_(m), data_(Mat::Zero(count * m, count * m)) {}

  int count() const { return m_ == 0 ? 0 : int(data_.rows() / m_); }
  int m() const { return m_; }
  Mat& mat() { return data_; }
  const Mat& mat() const { return data_; }
  auto at(int u, int s) { return data_.block(u * m_, s * m_, m_, m_); }
  auto at(int u, int s) const { return data_.block(u * m_, s * m_, m_, m_); }

 private:
  int m_ = 0;
  Mat data_;
};

// Composite trapezoid weights (dt included) for `count` samples.
// A single sample gets weight zero.
Vec trapezoid_weights(int count, double dt);

Mat trapezoid_integrate(const std::vector<Mat>& samples, double dt);

// Repeats each weight `block` times.
Vec expand_weights(const Vec& w, int block);

}  // namespace lqg
