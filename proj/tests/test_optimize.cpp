#include <gtest/gtest.h>

#include <cmath>

#include "switchcount/optimize.hpp"

using namespace switchcount::optim;

namespace {

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

double quadratic(std::span<const double> x) {
  // 0.5 x'Ax - b'x with A = [[4,1,0],[1,3,0.5],[0,0.5,2]], b = (1,2,3)
  const double A[3][3] = {{4, 1, 0}, {1, 3, 0.5}, {0, 0.5, 2}};
  const double b[3] = {1, 2, 3};
  double v = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) v += 0.5 * x[i] * A[i][j] * x[j];
    v -= b[i] * x[i];
  }
  return v;
}

}  // namespace

TEST(FiniteDifferences, GradientAndHessianOfSmoothFunction) {
  const Objective f = [](std::span<const double> x) { return std::sin(x[0]) * std::exp(x[1]) + x[0] * x[1] * x[1]; };
  const std::vector<double> x{0.7, -0.3};
  const auto g = fd_gradient(f, x, {});
  EXPECT_NEAR(g[0], std::cos(0.7) * std::exp(-0.3) + 0.09, 1e-8);
  EXPECT_NEAR(g[1], std::sin(0.7) * std::exp(-0.3) + 2 * 0.7 * -0.3, 1e-8);
  const auto H = fd_hessian(f, x, {});
  EXPECT_NEAR(H[0], -std::sin(0.7) * std::exp(-0.3), 1e-5);
  EXPECT_NEAR(H[1], std::cos(0.7) * std::exp(-0.3) - 0.6, 1e-5);
  EXPECT_NEAR(H[2], H[1], 1e-12);
  EXPECT_NEAR(H[3], std::sin(0.7) * std::exp(-0.3) + 1.4, 1e-5);
}

TEST(NelderMead, FindsRosenbrockValley) {
  Options o;
  o.max_evals = 20000;
  const auto r = nelder_mead(rosenbrock, {-1.2, 1.0}, {}, o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.x[1], 1.0, 2e-3);
}

TEST(Minimize, QuadraticOptimumMatchesLinearSolve) {
  const auto r = minimize(quadratic, {0.0, 0.0, 0.0});
  EXPECT_TRUE(r.converged);
  // solution of A x = b
  EXPECT_NEAR(r.x[0], 13.0 / 84.0, 2e-5);
  EXPECT_NEAR(r.x[1], 8.0 / 21.0, 2e-5);
  EXPECT_NEAR(r.x[2], 59.0 / 42.0, 2e-5);
  EXPECT_LT(r.grad_inf_norm, 1e-5 * std::abs(r.fx));
}

TEST(Minimize, RosenbrockConverges) {
  const auto r = minimize(rosenbrock, {-1.2, 1.0});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
  EXPECT_LE(r.evaluations, Options{}.max_evals + 50);
}

TEST(Minimize, NeverWorseThanStart) {
  const Objective f = [](std::span<const double> x) { return std::abs(x[0]) + std::abs(x[1] - 2.0); };
  const std::vector<double> x0{3.0, -1.0};
  const auto r = minimize(f, x0);
  EXPECT_LE(r.fx, f(x0));
}

TEST(Minimize, InfiniteRegionsAreAvoided) {
  const Objective f = [](std::span<const double> x) {
    return x[0] <= 0.0 ? INFINITY : x[0] - std::log(x[0]);  // minimum at 1
  };
  const auto r = minimize(f, {3.0});
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
}
