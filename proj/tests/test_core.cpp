#include <gtest/gtest.h>

#include "lqg/core.hpp"

using namespace lqg;

namespace {

double integrate(double (*f)(double), int N) {
  const TimeGrid g = make_grid(1.0, N);
  std::vector<Mat> s;
  for (double t : g.nodes()) s.push_back(Mat::Constant(1, 1, f(t)));
  return trapezoid_integrate(s, g.dt)(0, 0);
}

}  // namespace

TEST(Grid, BenchmarkSpacing) {
  const TimeGrid g = make_grid(1.0, 40);
  EXPECT_EQ(g.N, 40);
  EXPECT_DOUBLE_EQ(g.dt, 1.0 / 39.0);
  EXPECT_EQ(g.nodes().size(), 40u);
  EXPECT_DOUBLE_EQ(g.nodes().back(), 1.0);
}

TEST(Grid, TwoNodes) {
  const auto nodes = make_grid(1.0, 2).nodes();
  ASSERT_EQ(nodes.size(), 2u);
  EXPECT_EQ(nodes[0], 0.0);
  EXPECT_EQ(nodes[1], 1.0);
}

TEST(Grid, RejectsDegenerate) {
  EXPECT_THROW(make_grid(1.0, 1), Error);
  EXPECT_THROW(make_grid(0.0, 10), Error);
  EXPECT_THROW(make_grid(-1.0, 10), Error);
}

TEST(Trapezoid, ExactOnAffine) {
  for (int N : {2, 3, 17}) {
    EXPECT_NEAR(integrate([](double) { return 1.0; }, N), 1.0, 1e-14);
    EXPECT_NEAR(integrate([](double t) { return t; }, N), 0.5, 1e-14);
  }
}

TEST(Trapezoid, QuadraticCompositeSum) {
  EXPECT_NEAR(integrate([](double t) { return t * t; }, 41), 1.0 / 3.0 + 1.0 / 9600.0, 1e-14);
  EXPECT_NEAR(integrate([](double t) { return t * t; }, 41), 0.3334375, 1e-12);
}

TEST(Trapezoid, Weights) {
  const Vec w = trapezoid_weights(4, 0.5);
  EXPECT_DOUBLE_EQ(w(0), 0.25);
  EXPECT_DOUBLE_EQ(w(1), 0.5);
  EXPECT_DOUBLE_EQ(w(3), 0.25);
  EXPECT_EQ(trapezoid_weights(1, 0.5)(0), 0.0);
  const Vec e = expand_weights(w, 3);
  ASSERT_EQ(e.size(), 12);
  EXPECT_EQ(e(0), 0.25);
  EXPECT_EQ(e(2), 0.25);
  EXPECT_EQ(e(3), 0.5);
}

TEST(Blocks, ProjectionSelectsOneBlock) {
  const BlockLayout L(2, 1);
  EXPECT_EQ(L.m, 3);
  Mat v(1, 3);
  v << 4, 5, 6;
  const Mat p = block_project(v, L, 1);
  EXPECT_EQ(p(0, 0), 0);
  EXPECT_EQ(p(0, 1), 5);
  EXPECT_EQ(p(0, 2), 0);
  EXPECT_TRUE(block_project(v.transpose(), L, 1, false).isApprox(p.transpose()));
}

TEST(Blocks, ProjectorsAreDisjointAndExhaustive) {
  const BlockLayout L(2, 2);
  EXPECT_TRUE((L.projector(0) * L.projector(1)).isZero(0));
  Mat sum = Mat::Zero(L.m, L.m);
  for (int b = 0; b <= L.n; ++b) sum += L.projector(b);
  EXPECT_TRUE(sum.isIdentity(0));
  EXPECT_TRUE((L.selector(1) * L.selector(1).transpose()).isIdentity(0));
  EXPECT_THROW(L.check_block(3), Error);
}

TEST(TriKernel, CausalStorage) {
  TriKernel K(4, 2, 3);
  EXPECT_EQ(K.row(2).cols(), 9);
  K.at(2, 1).setConstant(1.5);
  EXPECT_EQ(K.get(2, 1)(1, 2), 1.5);
  EXPECT_TRUE(K.get(1, 2).isZero(0));
  EXPECT_EQ(K.max_abs(), 1.5);
  K.set_zero();
  EXPECT_EQ(K.max_abs(), 0.0);
}
