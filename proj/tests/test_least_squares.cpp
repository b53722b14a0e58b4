#include <gtest/gtest.h>

#include <cmath>

#include "vortrack/least_squares.hpp"

using vortrack::levenberg_marquardt;
using vortrack::LmOptions;
using vortrack::LmStop;

namespace {

struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  bool residual(const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    r = A * x - b;
    return true;
  }
  bool jacobian(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& J) {
    J = A;
    return true;
  }
};

struct Rosenbrock {
  int evaluations = 0;
  bool residual(const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    ++evaluations;
    r.resize(2);
    r << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
    return true;
  }
  bool jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd&, Eigen::MatrixXd& J) {
    J.resize(2, 2);
    J << -20.0 * x(0), 10.0, -1.0, 0.0;
    return true;
  }
};

// Feasible only for x(0) < 1.5; the unconstrained minimum sits at x = 2.
struct Fenced {
  bool residual(const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    r.resize(1);
    r << x(0) - 2.0;
    return x(0) < 1.5;
  }
  bool jacobian(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& J) {
    J = Eigen::MatrixXd::Ones(1, 1);
    return true;
  }
};

}  // namespace

TEST(LevenbergMarquardt, LinearLeastSquaresMatchesQr) {
  LinearModel m{Eigen::MatrixXd::Random(30, 4), Eigen::VectorXd::Random(30)};
  const Eigen::VectorXd ref = m.A.colPivHouseholderQr().solve(m.b);
  const auto res = levenberg_marquardt(m, Eigen::VectorXd::Zero(4));
  EXPECT_TRUE(res.converged());
  EXPECT_LE((res.x - ref).norm(), 1e-8);
}

TEST(LevenbergMarquardt, RosenbrockReachesMinimum) {
  Rosenbrock m;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto res = levenberg_marquardt(m, x0);
  EXPECT_TRUE(res.converged()) << to_string(res.stop);
  EXPECT_NEAR(res.x(0), 1.0, 1e-8);
  EXPECT_NEAR(res.x(1), 1.0, 1e-8);
  EXPECT_LE(res.cost, res.initial_cost);
}

TEST(LevenbergMarquardt, InadmissibleTrialsAreRejected) {
  Fenced m;
  const auto res = levenberg_marquardt(m, Eigen::VectorXd::Zero(1));
  EXPECT_LT(res.x(0), 1.5);
  EXPECT_LE(res.cost, res.initial_cost);
}

TEST(LevenbergMarquardt, IterationCap) {
  Rosenbrock m;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  LmOptions opt;
  opt.max_iterations = 2;
  const auto res = levenberg_marquardt(m, x0, opt);
  EXPECT_EQ(res.stop, LmStop::MaxIterations);
  EXPECT_FALSE(res.converged());
}
