#pragma once

#include <vector>

#include "lqg/core.hpp"

namespace lqg {

struct FilterState {
  int player = 0;
  int block = 1;
  int node = 0;
  SliceKernel F;                  // slice at `node`
  TriKernel Xtilde;               // d x m, rows filled up to `node`
  std::vector<Mat> Sigma_XX;      // filled up to `node`
  bool retain = false;
  std::vector<SliceKernel> slices;  // every slice when `retain`

  // Slice at node a; needs `retain` unless a == node.
  const SliceKernel& slice(int a) const;
};

// X~(u) = X(u)(I - Pi) - int X(z) F(z,u) dz over the current slice.
Mat unresolved_kernel(const Mat& X_row, const SliceKernel& F, const BlockLayout& layout,
                      int block, double dt);

// int X(s) X~(s)^T ds, symmetrized.
Mat state_error_cov(const Mat& X_row, const Mat& Xtilde_row, int m, double dt);

// State at node 0: F = 0, X~ from the first state row.
FilterState start_filter(int player, int block, const Mat& X_row0, const BlockLayout& layout,
                         int N, double dt, bool retain);

// Moves the filter from node a to a+1. X_next_row is the state row at a+1.
void advance_filter(FilterState& state, const Mat& X_next_row, const Mat& Gamma_t,
                    const Mat& Gamma_next, const BlockLayout& layout, double dt);

// Three-term closed form of F_a(u, s) built from the stored X~ history.
// On u = s the direct terms are dropped, matching the zero corner the
// recursion starts each new column with.
Mat explicit_filter_kernel(const TriKernel& Xtilde, const std::vector<Mat>& Gamma,
                           const BlockLayout& layout, int block, int a, int u, int s,
                           double dt);

// Cov(X_t, W_u | player info) = int_0^u X~_t(s) ds, for node t = a and u <= a.
Mat conditional_cross_cov(const Mat& Xtilde_row, int u, int m, double dt);

}  // namespace lqg
