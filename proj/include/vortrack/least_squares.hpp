#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string_view>

namespace vortrack {

struct LmOptions {
  int max_iterations = 100;
  /// Stop once sqrt(sum r^2) falls to this level.
  double residual_tolerance = 1e-12;
  /// Stop once a step is smaller than step_tolerance * (|x| + step_tolerance).
  double step_tolerance = 1e-12;
  /// Stop once an accepted step lowers the cost by less than this fraction.
  double function_tolerance = 1e-14;
  double initial_damping = 1e-3;
};

enum class LmStop { ResidualTolerance, StepTolerance, FunctionTolerance, MaxIterations, Stalled, Failed };

constexpr std::string_view to_string(LmStop s) {
  switch (s) {
    case LmStop::ResidualTolerance: return "residual_tolerance";
    case LmStop::StepTolerance: return "step_tolerance";
    case LmStop::FunctionTolerance: return "function_tolerance";
    case LmStop::MaxIterations: return "max_iterations";
    case LmStop::Stalled: return "stalled";
    case LmStop::Failed: return "failed";
  }
  return "failed";
}

struct LmResult {
  Eigen::VectorXd x;
  double cost = 0.0;          // sum of squared residuals at x
  double initial_cost = 0.0;  // at the starting point
  int iterations = 0;
  LmStop stop = LmStop::Failed;

  bool converged() const {
    return stop == LmStop::ResidualTolerance || stop == LmStop::StepTolerance || stop == LmStop::FunctionTolerance;
  }
};

/// Damped Gauss-Newton with Marquardt diagonal scaling.
///
/// `Model` provides
///   bool residual(const Eigen::VectorXd& x, Eigen::VectorXd& r);
///   bool jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& r, Eigen::MatrixXd& J);
/// Either may return false to flag an inadmissible point; trial points that do
/// so are rejected like any uphill step. Only steps that lower the cost are
/// ever accepted, so the returned cost never exceeds the initial one.
template <class Model>
LmResult levenberg_marquardt(Model& model, Eigen::VectorXd x, const LmOptions& opt = {}) {
  LmResult out;
  Eigen::VectorXd r, r_trial;
  Eigen::MatrixXd J;
  if (!model.residual(x, r) || !r.allFinite()) {
    out.x = std::move(x);
    out.cost = out.initial_cost = HUGE_VAL;
    out.stop = LmStop::Failed;
    return out;
  }
  double cost = r.squaredNorm();
  out.initial_cost = cost;
  double lambda = opt.initial_damping;
  bool need_jacobian = true;
  Eigen::MatrixXd JtJ;
  Eigen::VectorXd g;

  out.stop = LmStop::MaxIterations;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (std::sqrt(cost) <= opt.residual_tolerance) {
      out.stop = LmStop::ResidualTolerance;
      break;
    }
    if (need_jacobian) {
      if (!model.jacobian(x, r, J) || !J.allFinite()) {
        out.stop = LmStop::Failed;
        break;
      }
      JtJ = J.transpose() * J;
      g = J.transpose() * r;
      need_jacobian = false;
    }
    Eigen::MatrixXd A = JtJ;
    for (Eigen::Index i = 0; i < A.rows(); ++i) A(i, i) += lambda * std::max(JtJ(i, i), 1e-12);
    const Eigen::VectorXd step = A.ldlt().solve(-g);
    if (!step.allFinite()) {
      lambda *= 10.0;
      if (lambda > 1e16) { out.stop = LmStop::Stalled; break; }
      continue;
    }
    const bool tiny = step.norm() <= opt.step_tolerance * (x.norm() + opt.step_tolerance);
    const Eigen::VectorXd trial = x + step;
    const bool ok = model.residual(trial, r_trial) && r_trial.allFinite();
    const double trial_cost = ok ? r_trial.squaredNorm() : HUGE_VAL;
    if (ok && trial_cost < cost) {
      const double reduction = cost - trial_cost;
      x = trial;
      std::swap(r, r_trial);
      cost = trial_cost;
      lambda = std::max(lambda / 3.0, 1e-15);
      need_jacobian = true;
      if (tiny) { out.stop = LmStop::StepTolerance; ++it; break; }
      if (reduction <= opt.function_tolerance * (cost + reduction)) { out.stop = LmStop::FunctionTolerance; ++it; break; }
    } else {
      if (tiny) { out.stop = LmStop::StepTolerance; ++it; break; }
      lambda *= 4.0;
      if (lambda > 1e16) { out.stop = LmStop::Stalled; ++it; break; }
    }
  }
  if (out.stop == LmStop::MaxIterations && std::sqrt(cost) <= opt.residual_tolerance) {
    out.stop = LmStop::ResidualTolerance;
  }
  out.iterations = it;
  out.x = std::move(x);
  out.cost = cost;
  return out;
}

}  // namespace vortrack
