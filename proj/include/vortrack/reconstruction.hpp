#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vortrack/circulation.hpp"
#include "vortrack/dynamics.hpp"
#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"
#include "vortrack/integrator.hpp"
#include "vortrack/least_squares.hpp"
#include "vortrack/signal.hpp"

namespace vortrack {

struct Interval {
  std::size_t first = 0;  // sample index of the start
  std::size_t last = 0;   // sample index of the end (inclusive)
  double t_start = 0.0;
  double t_end = 0.0;

  std::size_t samples() const noexcept { return last - first + 1; }
};

struct PartitionPlan {
  double tau = 0.0;               // snapped to a multiple of h
  std::size_t steps_per_interval = 0;
  std::vector<Interval> intervals;

  std::size_t size() const noexcept { return intervals.size(); }

  /// Interval that owns sample k (each interval owns its start sample).
  std::size_t owner(std::size_t k) const {
    for (std::size_t j = intervals.size(); j-- > 0;) {
      if (k >= intervals[j].first) return j;
    }
    return 0;
  }
};

/// Splits the grid into n = ceil((t_f - t0) / tau) intervals of tau (snapped
/// down to a multiple of h), the last one ending at t_f.
inline PartitionPlan build_partition(const TimeGrid& grid, double tau) {
  grid.validate();
  const double span = grid.tf() - grid.t0;
  require(std::isfinite(tau) && tau > 0.0, "tau must be positive");
  require(tau <= span * (1.0 + 1e-12), "tau exceeds the horizon");
  const std::size_t total = grid.nt - 1;
  auto m = static_cast<std::size_t>(std::floor(tau / grid.h + 1e-9));
  m = std::min(m, total);
  if (m < 1) fail(ErrorCode::IntervalTooShort, "tau is shorter than one grid step");

  PartitionPlan plan;
  plan.steps_per_interval = m;
  plan.tau = static_cast<double>(m) * grid.h;
  const std::size_t n = (total + m - 1) / m;
  for (std::size_t j = 0; j < n; ++j) {
    Interval iv;
    iv.first = j * m;
    iv.last = std::min((j + 1) * m, total);
    iv.t_start = grid.time(iv.first);
    iv.t_end = grid.time(iv.last);
    if (iv.samples() < 2) fail(ErrorCode::IntervalTooShort, "interval " + std::to_string(j) + " has fewer than 2 samples");
    plan.intervals.push_back(iv);
  }
  return plan;
}

inline constexpr double kObjectivePenalty = 1e12;

struct ObjectiveValue {
  double value = 0.0;
  bool penalized = false;  // integration hit a singular or non-finite state
};

namespace detail {

/// Shooting model over one interval: unknowns are the 2 N_v start coordinates,
/// residuals the tracer misfits at every sample after the start.
struct IntervalModel {
  const TrajectoryEnsemble& ens;
  std::span<const double> gammas;
  Interval interval;
  double fd_step = 1e-6;

  std::size_t nv() const { return gammas.size(); }

  /// Integrates from `x`; fills residuals and, when `path` is non-null, the
  /// vortex positions at every interval sample. Returns false on a singular
  /// or non-finite integration.
  bool simulate(const Eigen::VectorXd& x, Eigen::VectorXd& r, PointTable* path = nullptr) const {
    const std::size_t n = nv(), np = ens.num_tracers();
    std::vector<PlanePoint> zv(n), zp(np);
    for (std::size_t v = 0; v < n; ++v) zv[v] = {x(static_cast<Eigen::Index>(2 * v)), x(static_cast<Eigen::Index>(2 * v + 1))};
    auto measured = [&](std::size_t k) { return ens.tracers.row(k); };
    const auto start = measured(interval.first);
    std::copy(start.begin(), start.end(), zp.begin());
    r.resize(static_cast<Eigen::Index>(2 * np * (interval.samples() - 1)));
    if (path) {
      *path = PointTable(interval.samples(), n);
      std::copy(zv.begin(), zv.end(), path->row(0).begin());
    }
    FehlbergStepper stepper(std::vector<double>(gammas.begin(), gammas.end()));
    try {
      Eigen::Index i = 0;
      for (std::size_t k = interval.first + 1; k <= interval.last; ++k) {
        stepper.step(zv, zp, ens.grid.h);
        const auto meas = measured(k);
        for (std::size_t p = 0; p < np; ++p) {
          r(i++) = zp[p].x - meas[p].x;
          r(i++) = zp[p].y - meas[p].y;
        }
        if (path) std::copy(zv.begin(), zv.end(), path->row(k - interval.first).begin());
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularConfiguration || e.code() == ErrorCode::NonFiniteState) return false;
      throw;
    }
    return r.allFinite();
  }

  bool residual(const Eigen::VectorXd& x, Eigen::VectorXd& r) { return simulate(x, r); }

  bool jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& r, Eigen::MatrixXd& J) {
    J.resize(r.size(), x.size());
    Eigen::VectorXd rp, rm;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += fd_step;
      xm(i) -= fd_step;
      if (!simulate(xp, rp) || !simulate(xm, rm)) return false;
      J.col(i) = (rp - rm) / (2.0 * fd_step);
    }
    return true;
  }
};

inline Eigen::VectorXd pack_positions(std::span<const PlanePoint> z) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(2 * z.size()));
  for (std::size_t v = 0; v < z.size(); ++v) {
    x(static_cast<Eigen::Index>(2 * v)) = z[v].x;
    x(static_cast<Eigen::Index>(2 * v + 1)) = z[v].y;
  }
  return x;
}

inline std::vector<PlanePoint> unpack_positions(const Eigen::VectorXd& x) {
  std::vector<PlanePoint> z(static_cast<std::size_t>(x.size() / 2));
  for (std::size_t v = 0; v < z.size(); ++v) {
    z[v] = {x(static_cast<Eigen::Index>(2 * v)), x(static_cast<Eigen::Index>(2 * v + 1))};
  }
  return z;
}

inline void check_interval(const TrajectoryEnsemble& ens, const Interval& iv) {
  if (iv.last >= ens.tracers.rows() || iv.first >= iv.last) fail(ErrorCode::ShapeMismatch, "interval outside the trajectory");
}

}  // namespace detail

/// Sum of squared tracer misfits over the interval when the vortices start at
/// `start` and the tracers at their measured positions. Singular or
/// non-finite integrations return the penalty value, flagged.
inline ObjectiveValue subproblem_objective(std::span<const PlanePoint> start, const Interval& interval,
                                           const TrajectoryEnsemble& ens, std::span<const double> gammas) {
  require(start.size() == gammas.size() && !gammas.empty(), "one start position per circulation required");
  detail::check_interval(ens, interval);
  detail::IntervalModel model{ens, gammas, interval};
  Eigen::VectorXd r;
  if (!model.simulate(detail::pack_positions(start), r)) return {kObjectivePenalty, true};
  return {r.squaredNorm(), false};
}

struct ReconstructionConfig {
  double alpha = 0.2;
  std::size_t max_lag = 10000;
  int max_iterations = 50;
  double fd_step = 1e-6;
  double step_tolerance = 1e-10;
  double function_tolerance = 1e-10;
  /// Horizon continuation: fit the first `continuation_start` time units of
  /// the interval, then double the fitted span until it covers the interval,
  /// warm-starting each stage. 0 fits the full interval directly.
  double continuation_start = 0.5;

  void validate() const {
    require(continuation_start >= 0.0 && std::isfinite(continuation_start), "continuation_start must be nonnegative");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(max_lag >= 1, "max_lag must be positive");
    require(max_iterations > 0, "max_iterations must be positive");
    require(fd_step > 0.0 && step_tolerance > 0.0 && function_tolerance > 0.0, "steps and tolerances must be positive");
  }
};

struct SubProblemResult {
  std::size_t j = 0;
  std::vector<PlanePoint> start;   // optimized start positions
  double objective = 0.0;
  double initial_objective = 0.0;  // at the supplied guess
  PointTable path;                 // interval samples x N_v
  bool converged = false;
  bool penalized = false;          // the final point could not be integrated
  int iterations = 0;
};

namespace detail {

inline LmResult fit_interval(const TrajectoryEnsemble& ens, std::span<const double> gammas, const Interval& iv,
                             Eigen::VectorXd x, const ReconstructionConfig& cfg) {
  IntervalModel model{ens, gammas, iv, cfg.fd_step};
  LmOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.residual_tolerance = 1e-14;
  opt.step_tolerance = cfg.step_tolerance;
  opt.function_tolerance = cfg.function_tolerance;
  return levenberg_marquardt(model, std::move(x), opt);
}

}  // namespace detail

/// Optimizes the vortex start positions of one interval by Levenberg-Marquardt
/// with a central finite-difference Jacobian. The result never has a larger
/// objective than the guess.
inline SubProblemResult solve_subproblem(std::size_t j, const Interval& interval, std::span<const PlanePoint> guess,
                                         const TrajectoryEnsemble& ens, std::span<const double> gammas,
                                         const ReconstructionConfig& cfg = {}) {
  cfg.validate();
  require(guess.size() == gammas.size() && !gammas.empty(), "one guess position per circulation required");
  detail::check_interval(ens, interval);
  const Eigen::VectorXd x0 = detail::pack_positions(guess);
  Eigen::VectorXd x = x0;

  if (cfg.continuation_start > 0.0) {
    const auto full = interval.last - interval.first;
    for (double span = cfg.continuation_start;; span *= 2.0) {
      const auto m = static_cast<std::size_t>(std::llround(span / ens.grid.h));
      if (m >= full) break;
      if (m < 1) continue;
      x = detail::fit_interval(ens, gammas, {interval.first, interval.first + m, 0.0, 0.0}, x, cfg).x;
    }
  }
  LmResult res = detail::fit_interval(ens, gammas, interval, x, cfg);

  SubProblemResult out;
  out.j = j;
  detail::IntervalModel model{ens, gammas, interval, cfg.fd_step};
  Eigen::VectorXd r;
  out.initial_objective = model.simulate(x0, r) ? r.squaredNorm() : kObjectivePenalty;
  if (!(res.cost <= out.initial_objective)) {
    res.x = x0;
    res.stop = LmStop::Stalled;
  }
  out.iterations = res.iterations;
  out.start = detail::unpack_positions(res.x);
  if (model.simulate(res.x, r, &out.path)) {
    out.objective = r.squaredNorm();
  } else {
    out.objective = kObjectivePenalty;
    out.penalized = true;
  }
  out.converged = res.converged() && !out.penalized;
  return out;
}

struct ReconstructionResult {
  PartitionPlan plan;
  std::vector<SubProblemResult> intervals;
  std::vector<double> circulations;
  PointTable trajectory;  // N_t x N_v, each interval owning its start sample
  std::vector<double> per_tracer_tau;  // empty when tau was supplied
};

/// Sequential interval solves over a fixed partition; each interval starts
/// from the previous interval's end positions.
inline ReconstructionResult reconstruct_trajectories(const TrajectoryEnsemble& ens, std::span<const double> gammas,
                                           const PartitionPlan& plan, std::span<const PlanePoint> guess0,
                                           const ReconstructionConfig& cfg = {}) {
  ens.validate();
  cfg.validate();
  require(!gammas.empty() && guess0.size() == gammas.size(), "one initial position per circulation required");
  require(!plan.intervals.empty() && plan.intervals.back().last + 1 == ens.tracers.rows(),
          "partition does not match the trajectory");

  ReconstructionResult out;
  out.plan = plan;
  out.circulations.assign(gammas.begin(), gammas.end());
  out.trajectory = PointTable(ens.tracers.rows(), gammas.size());
  std::vector<PlanePoint> guess(guess0.begin(), guess0.end());
  for (std::size_t j = 0; j < plan.size(); ++j) {
    const Interval& iv = plan.intervals[j];
    SubProblemResult sub = solve_subproblem(j, iv, guess, ens, gammas, cfg);
    const bool last = j + 1 == plan.size();
    const std::size_t owned = last ? iv.samples() : iv.samples() - 1;
    if (!sub.penalized) {
      for (std::size_t i = 0; i < owned; ++i) {
        const auto row = sub.path.row(i);
        std::copy(row.begin(), row.end(), out.trajectory.row(iv.first + i).begin());
      }
      const auto end = sub.path.row(iv.samples() - 1);
      guess.assign(end.begin(), end.end());
    } else {
      // Unintegrable interval: hold the start positions and carry them on.
      for (std::size_t i = 0; i < owned; ++i) {
        std::copy(sub.start.begin(), sub.start.end(), out.trajectory.row(iv.first + i).begin());
      }
      guess = sub.start;
    }
    out.intervals.push_back(std::move(sub));
  }
  return out;
}

/// Full procedure: tau from the tracer autocorrelations, then the partition
/// and the interval solves.
inline ReconstructionResult reconstruct_trajectories(const TrajectoryEnsemble& ens, std::span<const double> gammas,
                                           std::span<const PlanePoint> guess0, const ReconstructionConfig& cfg = {}) {
  cfg.validate();
  ens.validate();
  const std::size_t max_lag = std::min(cfg.max_lag, ens.tracers.rows() - 1);
  const DecorrelationResult dec = decorrelation_times(ens, cfg.alpha, max_lag);
  ReconstructionResult out = reconstruct_trajectories(ens, gammas, build_partition(ens.grid, dec.tau), guess0, cfg);
  out.per_tracer_tau = dec.per_tracer;
  return out;
}

struct ErrorSeries {
  std::vector<double> per_step;  // e_k
  double total = 0.0;            // sum_k |Zhat - Z| / sum_k |Z|
};

/// Relative position error of a recovered vortex history against the truth.
/// Vortices are paired by rank of circulation. At a sample where the true
/// state vector is zero the absolute error is reported.
inline ErrorSeries evaluate(const PointTable& recovered, std::span<const double> recovered_gammas,
                            const PointTable& truth, std::span<const double> truth_gammas) {
  if (recovered.rows() != truth.rows() || recovered.cols() != truth.cols() ||
      recovered_gammas.size() != recovered.cols() || truth_gammas.size() != truth.cols()) {
    fail(ErrorCode::ShapeMismatch, "recovered and true histories differ in shape");
  }
  const auto ro = circulation_order(recovered_gammas);
  const auto to = circulation_order(truth_gammas);
  ErrorSeries out;
  out.per_step.resize(truth.rows());
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < truth.rows(); ++k) {
    double d2 = 0.0, z2 = 0.0;
    for (std::size_t i = 0; i < truth.cols(); ++i) {
      const PlanePoint z = truth(k, to[i]);
      d2 += norm2(recovered(k, ro[i]) - z);
      z2 += norm2(z);
    }
    const double d = std::sqrt(d2), z = std::sqrt(z2);
    out.per_step[k] = z > 0.0 ? d / z : d;
    num += d;
    den += z;
  }
  out.total = den > 0.0 ? num / den : num;
  return out;
}

inline ErrorSeries evaluate(const ReconstructionResult& result, const SimulationRecord& truth) {
  return evaluate(result.trajectory, result.circulations, truth.vortex_history, truth.circulations);
}

/// Fraction of interval boundaries where the error at the new interval's
/// first sample does not exceed the error at the previous sample.
/// Empty optional when the plan has a single interval.
inline std::optional<double> boundary_drop_fraction(const ErrorSeries& errors, const PartitionPlan& plan) {
  if (plan.size() < 2) return std::nullopt;
  std::size_t drops = 0;
  for (std::size_t j = 1; j < plan.size(); ++j) {
    const std::size_t k = plan.intervals[j].first;
    require(k < errors.per_step.size(), "error series shorter than the partition");
    if (errors.per_step[k] <= errors.per_step[k - 1]) ++drops;
  }
  return static_cast<double>(drops) / static_cast<double>(plan.size() - 1);
}

}  // namespace vortrack
