#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vortrack/dynamics.hpp"
#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"
#include "vortrack/integrator.hpp"
#include "vortrack/least_squares.hpp"
#include "vortrack/signal.hpp"

namespace vortrack {

enum class Aggregator { Median, Mean };

constexpr std::string_view to_string(Aggregator a) { return a == Aggregator::Mean ? "mean" : "median"; }

inline Aggregator aggregator_from_string(std::string_view s) {
  if (s == "median") return Aggregator::Median;
  if (s == "mean") return Aggregator::Mean;
  fail(ErrorCode::InvalidArgument, "unknown aggregator '" + std::string(s) + "'");
}

/// How the solved snapshot seeds the next one.
///   Direct:   the solution itself is advanced one grid step.
///   Filtered: a Kalman filter fuses the advanced state with each solution,
///             weighted by the solution's covariance, and gates implausible ones.
enum class Tracking { Direct, Filtered };

constexpr std::string_view to_string(Tracking t) { return t == Tracking::Direct ? "direct" : "filtered"; }

inline Tracking tracking_from_string(std::string_view s) {
  if (s == "direct") return Tracking::Direct;
  if (s == "filtered") return Tracking::Filtered;
  fail(ErrorCode::InvalidArgument, "unknown tracking mode '" + std::string(s) + "'");
}

struct TrackingConfig {
  Tracking mode = Tracking::Filtered;
  /// Measurement covariance multiplier; consecutive smoothed samples are not independent.
  double inflation = 20.0;
  /// Per-step process noise (standard deviation) on positions and circulations.
  double position_noise = 1e-3;
  double circulation_noise = 0.0;
  /// Squared Mahalanobis distance above which a solution is not fused.
  double gate = 30.0;
  /// Prior spread of the initial guess: absolute for positions, relative for circulations.
  double initial_position_sd = 0.2;
  double initial_circulation_rsd = 0.3;

  void validate() const {
    require(inflation > 0.0 && std::isfinite(inflation), "tracking inflation must be positive");
    require(position_noise >= 0.0 && circulation_noise >= 0.0, "tracking process noise must be nonnegative");
    require(gate > 0.0, "tracking gate must be positive");
    require(initial_position_sd > 0.0 && initial_circulation_rsd > 0.0, "tracking prior spreads must be positive");
  }
};

struct SolverConfig {
  /// Half-width of the relative circulation-guess perturbation.
  double epsilon = 0.1;
  int max_iterations = 50;
  double residual_tolerance = 1e-12;
  double step_tolerance = 1e-12;
  std::uint64_t seed = 0;
  Aggregator aggregator = Aggregator::Median;
  /// Number of complete passes; each pass after the first starts from the
  /// previous pass's aggregate circulations.
  int passes = 1;
  TrackingConfig tracking;

  void validate() const {
    require(epsilon >= 0.0 && std::isfinite(epsilon), "epsilon must be nonnegative");
    require(max_iterations > 0, "max_iterations must be positive");
    require(residual_tolerance > 0.0 && step_tolerance > 0.0, "tolerances must be positive");
    require(passes >= 1, "passes must be at least 1");
    tracking.validate();
  }
};

/// Tracer positions and velocities at one sample time.
struct SnapshotData {
  std::span<const PlanePoint> positions;
  std::span<const PlanePoint> velocities;
};

struct SnapshotResidual {
  std::vector<double> values;  // 2 N_p entries, (Re, Im) per tracer
  bool clamped = false;        // some tracer-vortex distance hit the clamp
};

namespace detail {

/// Separation tracer - vortex, lengthened to the collision tolerance when closer.
inline PlanePoint clamped_separation(PlanePoint tracer, PlanePoint vortex, bool& clamped) {
  PlanePoint d = tracer - vortex;
  const double r2 = norm2(d);
  constexpr double tol2 = kCollisionTolerance * kCollisionTolerance;
  if (r2 < tol2) {
    clamped = true;
    d = r2 > 0.0 ? (kCollisionTolerance / std::sqrt(r2)) * d : PlanePoint{kCollisionTolerance, 0.0};
  }
  return d;
}

inline void check_snapshot_shape(const SnapshotData& data, std::size_t nv) {
  require(data.positions.size() == data.velocities.size(), "positions and velocities differ in length");
  require(nv >= 1, "need at least one vortex");
  require(!data.positions.empty(), "need at least one tracer");
}

inline void check_identifiable(const SnapshotData& data, std::size_t nv) {
  require(2 * data.positions.size() >= 3 * nv, "need 2 N_p >= 3 N_v tracer equations");
}

// Unknown layout: [Gamma_0..Gamma_{n-1}, x_0, y_0, ..., x_{n-1}, y_{n-1}].
inline Eigen::VectorXd pack(std::span<const double> gammas, std::span<const PlanePoint> z) {
  const auto n = static_cast<Eigen::Index>(gammas.size());
  Eigen::VectorXd u(3 * n);
  for (Eigen::Index v = 0; v < n; ++v) {
    u(v) = gammas[static_cast<std::size_t>(v)];
    u(n + 2 * v) = z[static_cast<std::size_t>(v)].x;
    u(n + 2 * v + 1) = z[static_cast<std::size_t>(v)].y;
  }
  return u;
}

inline PlanePoint unpack_position(const Eigen::VectorXd& u, std::size_t nv, std::size_t v) {
  const auto n = static_cast<Eigen::Index>(nv);
  const auto i = static_cast<Eigen::Index>(v);
  return {u(n + 2 * i), u(n + 2 * i + 1)};
}

/// Least-squares model of the tracer velocity equation at one snapshot.
/// Residual per tracer: conj(measured velocity) - (1/2 pi i) sum Gamma_v / (z_p - z_v),
/// i.e. (u_meas - u_model, v_model - v_meas).
struct SnapshotModel {
  SnapshotData data;
  std::size_t nv;
  bool clamped = false;

  bool residual(const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    const std::size_t np = data.positions.size();
    r.resize(static_cast<Eigen::Index>(2 * np));
    clamped = false;
    for (std::size_t p = 0; p < np; ++p) {
      double um = 0.0, vm = 0.0;
      for (std::size_t v = 0; v < nv; ++v) {
        const PlanePoint d = clamped_separation(data.positions[p], unpack_position(u, nv, v), clamped);
        const double k = u(static_cast<Eigen::Index>(v)) / (2.0 * kPi * norm2(d));
        um -= k * d.y;
        vm += k * d.x;
      }
      r(static_cast<Eigen::Index>(2 * p)) = data.velocities[p].x - um;
      r(static_cast<Eigen::Index>(2 * p + 1)) = vm - data.velocities[p].y;
    }
    return true;
  }

  bool jacobian(const Eigen::VectorXd& u, const Eigen::VectorXd&, Eigen::MatrixXd& J) {
    const std::size_t np = data.positions.size();
    const auto n = static_cast<Eigen::Index>(nv);
    J.setZero(static_cast<Eigen::Index>(2 * np), 3 * n);
    bool dummy = false;
    for (std::size_t p = 0; p < np; ++p) {
      const auto rx = static_cast<Eigen::Index>(2 * p), ry = rx + 1;
      for (std::size_t v = 0; v < nv; ++v) {
        const auto iv = static_cast<Eigen::Index>(v);
        const PlanePoint d = clamped_separation(data.positions[p], unpack_position(u, nv, v), dummy);
        const double r2 = norm2(d);
        const double gamma = u(iv);
        const double c = 1.0 / (2.0 * kPi * r2);
        const double q = gamma / (2.0 * kPi * r2 * r2);
        // d(u_model)/dGamma = -c dy, d(v_model)/dGamma = c dx
        J(rx, iv) = c * d.y;
        J(ry, iv) = c * d.x;
        // Derivatives with respect to the vortex coordinates (d = z_p - z_v).
        const double dudx = -2.0 * q * d.x * d.y;
        const double dudy = q * (d.x * d.x - d.y * d.y);
        const double dvdx = q * (d.x * d.x - d.y * d.y);
        const double dvdy = 2.0 * q * d.x * d.y;
        J(rx, n + 2 * iv) = -dudx;
        J(rx, n + 2 * iv + 1) = -dudy;
        J(ry, n + 2 * iv) = dvdx;
        J(ry, n + 2 * iv + 1) = dvdy;
      }
    }
    return true;
  }
};

}  // namespace detail

/// Residual of the tracer velocity equation for a candidate vortex configuration.
/// Candidate vortices closer than the collision tolerance to a tracer are
/// evaluated at the tolerance distance and flagged.
inline SnapshotResidual snapshot_residual(const VortexSystem& candidate, const SnapshotData& data) {
  require(candidate.circulations.size() == candidate.positions.size(), "one circulation per vortex required");
  detail::check_snapshot_shape(data, candidate.size());
  detail::SnapshotModel model{data, candidate.size()};
  Eigen::VectorXd r;
  model.residual(detail::pack(candidate.circulations, candidate.positions), r);
  return {std::vector<double>(r.data(), r.data() + r.size()), model.clamped};
}

struct SnapshotSolution {
  std::size_t k = 0;
  std::vector<double> circulations;
  std::vector<PlanePoint> positions;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Nonlinear least-squares fit of circulations and vortex positions to one
/// snapshot of tracer positions and velocities, starting from `guess`.
inline SnapshotSolution solve_snapshot(const SnapshotData& data, const VortexSystem& guess, const SolverConfig& cfg,
                                       std::size_t k = 0) {
  cfg.validate();
  require(guess.circulations.size() == guess.positions.size(), "one circulation per vortex required");
  const std::size_t nv = guess.size();
  detail::check_snapshot_shape(data, nv);
  detail::check_identifiable(data, nv);

  detail::SnapshotModel model{data, nv};
  LmOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.residual_tolerance = cfg.residual_tolerance;
  opt.step_tolerance = cfg.step_tolerance;
  const LmResult res = levenberg_marquardt(model, detail::pack(guess.circulations, guess.positions), opt);

  SnapshotSolution sol;
  sol.k = k;
  sol.iterations = res.iterations;
  sol.residual_norm = std::sqrt(res.cost);
  sol.circulations.resize(nv);
  sol.positions.resize(nv);
  bool finite = res.x.allFinite() && std::isfinite(sol.residual_norm);
  for (std::size_t v = 0; v < nv; ++v) {
    sol.circulations[v] = res.x(static_cast<Eigen::Index>(v));
    sol.positions[v] = detail::unpack_position(res.x, nv, v);
  }
  // Solutions resting on the clamp or with coincident vortices are not trusted.
  bool admissible = finite;
  if (admissible) {
    Eigen::VectorXd r;
    model.residual(res.x, r);
    admissible = !model.clamped;
    for (std::size_t v = 0; v < nv && admissible; ++v) {
      for (std::size_t s = v + 1; s < nv; ++s) {
        if (norm2(sol.positions[v] - sol.positions[s]) <= kCollisionTolerance * kCollisionTolerance) admissible = false;
      }
    }
  }
  sol.converged = admissible && res.converged();
  return sol;
}

/// Tukey fences: keep values inside [Q1 - 1.5 IQR, Q3 + 1.5 IQR].
/// Quartiles use linear interpolation between order statistics.
inline std::vector<bool> tukey_retained(std::span<const double> values) {
  require(values.size() >= 4, "outlier analysis needs at least 4 values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double q1 = quantile(0.25), q3 = quantile(0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr, hi = q3 + 1.5 * iqr;
  std::vector<bool> keep(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) keep[i] = values[i] >= lo && values[i] <= hi;
  return keep;
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double mean(const std::vector<double>& v) {
  require(!v.empty(), "mean of an empty set");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct CirculationEstimate {
  std::vector<SnapshotSolution> per_snapshot;  // last pass
  /// retained[k][v]: snapshot k converged and its Gamma_v lies inside the fences.
  std::vector<std::vector<bool>> retained;
  std::vector<double> circulations;  // aggregate selected by `aggregator`
  std::vector<double> mean_circulations;
  std::vector<double> median_circulations;
  Aggregator aggregator = Aggregator::Median;
  std::size_t converged_snapshots = 0;

  /// Positions solved at the first snapshot; seeds trajectory reconstruction.
  std::vector<PlanePoint> initial_positions() const { return per_snapshot.front().positions; }
};

namespace detail {

inline bool admissible_system(std::span<const double> gammas, std::span<const PlanePoint> z) {
  for (double g : gammas) {
    if (!std::isfinite(g) || g == 0.0) return false;
  }
  for (std::size_t v = 0; v < z.size(); ++v) {
    if (!is_finite(z[v])) return false;
    for (std::size_t s = v + 1; s < z.size(); ++s) {
      if (norm2(z[v] - z[s]) <= kCollisionTolerance * kCollisionTolerance) return false;
    }
  }
  return true;
}

/// Covariance of a snapshot solution, s^2 (J^T J)^-1 with s^2 the residual
/// variance. Empty when J^T J is numerically singular.
inline Eigen::MatrixXd solution_covariance(const SnapshotData& data, const SnapshotSolution& sol) {
  const std::size_t nv = sol.circulations.size();
  SnapshotModel model{data, nv};
  const Eigen::VectorXd u = pack(sol.circulations, sol.positions);
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  model.residual(u, r);
  model.jacobian(u, r, J);
  const Eigen::MatrixXd jtj = J.transpose() * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff())) return {};
  const double dof = std::max<double>(1.0, static_cast<double>(r.size() - u.size()));
  return (r.squaredNorm() / dof) * jtj.inverse();
}

/// One grid step of the vortex equations on a packed [Gamma, positions] state.
inline Eigen::VectorXd advance_state(const Eigen::VectorXd& x, std::size_t nv, double h) {
  VortexSystem s;
  for (std::size_t v = 0; v < nv; ++v) {
    s.circulations.push_back(x(static_cast<Eigen::Index>(v)));
    s.positions.push_back(unpack_position(x, nv, v));
  }
  const auto z = advance_vortices(s, h, 1);
  return pack(s.circulations, z);
}

/// Extended Kalman filter over the packed vortex state. Snapshot solutions
/// are the measurements; the vortex equations are the dynamics.
class SnapshotTracker {
 public:
  SnapshotTracker(const VortexSystem& guess, const TrackingConfig& cfg)
      : cfg_(cfg), nv_(guess.size()), x_(pack(guess.circulations, guess.positions)) {
    const auto n = static_cast<Eigen::Index>(3 * nv_);
    P_ = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t v = 0; v < nv_; ++v) {
      const auto i = static_cast<Eigen::Index>(v), j = static_cast<Eigen::Index>(nv_ + 2 * v);
      P_(i, i) = std::pow(cfg.initial_circulation_rsd * x_(i), 2);
      P_(j, j) = P_(j + 1, j + 1) = std::pow(cfg.initial_position_sd, 2);
    }
  }

  /// Fuses a solution; returns false when it is gated out or unusable.
  bool update(const SnapshotData& data, const SnapshotSolution& sol) {
    if (!sol.converged || !admissible_system(sol.circulations, sol.positions)) return false;
    const Eigen::MatrixXd C = solution_covariance(data, sol);
    if (C.size() == 0 || !C.allFinite()) return false;
    const auto n = x_.size();
    Eigen::MatrixXd R = cfg_.inflation * C;
    // Floor keeps the gate meaningful for exact data.
    R.diagonal().array() += 1e-16;
    const Eigen::VectorXd innovation = pack(sol.circulations, sol.positions) - x_;
    const Eigen::LDLT<Eigen::MatrixXd> S(P_ + R);
    if (S.info() != Eigen::Success) return false;
    const double d2 = innovation.dot(S.solve(innovation));
    if (!(d2 >= 0.0 && d2 < cfg_.gate)) return false;
    const Eigen::MatrixXd K = S.solve(P_).transpose();
    const Eigen::VectorXd x = x_ + K * innovation;
    std::vector<double> g(nv_);
    std::vector<PlanePoint> z(nv_);
    for (std::size_t v = 0; v < nv_; ++v) {
      g[v] = x(static_cast<Eigen::Index>(v));
      z[v] = unpack_position(x, nv_, v);
    }
    if (!admissible_system(g, z)) return false;
    const Eigen::MatrixXd IK = Eigen::MatrixXd::Identity(n, n) - K;
    P_ = IK * P_ * IK.transpose() + K * R * K.transpose();
    P_ = 0.5 * (P_ + P_.transpose());
    x_ = x;
    return true;
  }

  /// Advances the state and its covariance by one grid step.
  void predict(double h) {
    const auto n = x_.size();
    Eigen::VectorXd next;
    Eigen::MatrixXd F(n, n);
    try {
      next = advance_state(x_, nv_, h);
      constexpr double e = 1e-6;
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd a = x_, b = x_;
        a(i) += e;
        b(i) -= e;
        F.col(i) = (advance_state(a, nv_, h) - advance_state(b, nv_, h)) / (2.0 * e);
      }
    } catch (const Error&) {
      next = x_;
      F.setIdentity();
    }
    x_ = next;
    P_ = F * P_ * F.transpose();
    for (std::size_t v = 0; v < nv_; ++v) {
      const auto i = static_cast<Eigen::Index>(v), j = static_cast<Eigen::Index>(nv_ + 2 * v);
      P_(i, i) += cfg_.circulation_noise * cfg_.circulation_noise;
      P_(j, j) += cfg_.position_noise * cfg_.position_noise;
      P_(j + 1, j + 1) += cfg_.position_noise * cfg_.position_noise;
    }
  }

  double circulation(std::size_t v) const { return x_(static_cast<Eigen::Index>(v)); }
  PlanePoint position(std::size_t v) const { return unpack_position(x_, nv_, v); }

 private:
  TrackingConfig cfg_;
  std::size_t nv_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd P_;
};

inline CirculationEstimate circulation_pass(const TrajectoryEnsemble& ens, const VelocityEnsemble& vel,
                                            VortexSystem guess, const SolverConfig& cfg, std::mt19937_64& rng) {
  const std::size_t nt = ens.tracers.rows(), nv = guess.size();
  std::uniform_real_distribution<double> perturb(-cfg.epsilon, cfg.epsilon);
  CirculationEstimate est;
  est.aggregator = cfg.aggregator;
  est.per_snapshot.reserve(nt);

  SnapshotTracker tracker(guess, cfg.tracking);
  std::vector<double> base_gamma = guess.circulations;
  for (std::size_t k = 0; k < nt; ++k) {
    SnapshotData data{ens.tracers.row(k), vel.velocities.row(k)};
    SnapshotSolution sol = solve_snapshot(data, guess, cfg, k);
    if (sol.converged) ++est.converged_snapshots;

    if (k + 1 < nt) {
      if (cfg.tracking.mode == Tracking::Direct) {
        // A failed solve is still followed; only non-finite or degenerate
        // states fall back to the current guess.
        const bool usable = admissible_system(sol.circulations, sol.positions);
        const VortexSystem base{usable ? sol.circulations : guess.circulations,
                                usable ? sol.positions : guess.positions};
        base_gamma = base.circulations;
        try {
          guess.positions = advance_vortices(base, ens.grid.h, 1);
        } catch (const Error&) {
          guess.positions = base.positions;
        }
      } else {
        tracker.update(data, sol);
        tracker.predict(ens.grid.h);
        for (std::size_t v = 0; v < nv; ++v) {
          base_gamma[v] = tracker.circulation(v);
          guess.positions[v] = tracker.position(v);
        }
      }
      for (std::size_t v = 0; v < nv; ++v) {
        const double g = base_gamma[v] * (1.0 + perturb(rng));
        guess.circulations[v] = g != 0.0 ? g : base_gamma[v];
      }
    }
    est.per_snapshot.push_back(std::move(sol));
  }
  return est;
}

}  // namespace detail

/// Outlier filter and aggregation over the per-snapshot circulations.
inline void aggregate_circulations(CirculationEstimate& est, std::size_t nv) {
  const std::size_t nt = est.per_snapshot.size();
  est.retained.assign(nt, std::vector<bool>(nv, false));
  est.mean_circulations.assign(nv, 0.0);
  est.median_circulations.assign(nv, 0.0);
  est.circulations.assign(nv, 0.0);

  std::vector<std::size_t> ok;
  for (std::size_t k = 0; k < nt; ++k) {
    if (est.per_snapshot[k].converged) ok.push_back(k);
  }
  if (2 * ok.size() < nt) {
    fail(ErrorCode::EstimationFailed, "only " + std::to_string(ok.size()) + " of " + std::to_string(nt) +
                                          " snapshot solves converged");
  }
  for (std::size_t v = 0; v < nv; ++v) {
    std::vector<double> values;
    values.reserve(ok.size());
    for (std::size_t k : ok) values.push_back(est.per_snapshot[k].circulations[v]);
    const std::vector<bool> keep = tukey_retained(values);
    std::vector<double> kept;
    for (std::size_t i = 0; i < ok.size(); ++i) {
      if (keep[i]) {
        est.retained[ok[i]][v] = true;
        kept.push_back(values[i]);
      }
    }
    if (2 * kept.size() < nt) {
      fail(ErrorCode::EstimationFailed, "fewer than half the snapshots retained for vortex " + std::to_string(v));
    }
    est.mean_circulations[v] = mean(kept);
    est.median_circulations[v] = median(kept);
    est.circulations[v] = est.aggregator == Aggregator::Mean ? est.mean_circulations[v] : est.median_circulations[v];
  }
}

/// Circulation estimation from smoothed tracer positions and their velocities.
///
/// Each sample is inverted in turn. The solved state, advanced by one grid
/// step (directly, or through the tracking filter), seeds the next solve; the
/// next circulation guess is scaled by 1 + delta, delta ~ U[-epsilon, epsilon].
/// Per-vortex Tukey fences then discard outliers and the survivors are aggregated.
inline CirculationEstimate estimate_circulations(const TrajectoryEnsemble& ens, const VelocityEnsemble& vel,
                                          const VortexSystem& initial_guess, const SolverConfig& cfg) {
  cfg.validate();
  ens.validate();
  require(initial_guess.circulations.size() == initial_guess.positions.size() && !initial_guess.positions.empty(),
          "initial guess needs one circulation per vortex");
  if (vel.velocities.rows() != ens.tracers.rows() || vel.velocities.cols() != ens.tracers.cols()) {
    fail(ErrorCode::ShapeMismatch, "velocity and trajectory ensembles differ in shape");
  }
  require(2 * ens.num_tracers() >= 3 * initial_guess.size(), "need 2 N_p >= 3 N_v");
  require(ens.tracers.rows() >= 4, "need at least 4 snapshots for the outlier analysis");

  std::mt19937_64 rng(cfg.seed);
  VortexSystem guess = initial_guess;
  CirculationEstimate est;
  for (int pass = 0; pass < cfg.passes; ++pass) {
    est = detail::circulation_pass(ens, vel, guess, cfg, rng);
    aggregate_circulations(est, guess.size());
    guess.circulations = est.circulations;
    guess.positions = est.per_snapshot.front().positions;
  }
  return est;
}

/// Indices that order vortices by circulation (ties by original index).
inline std::vector<std::size_t> circulation_order(std::span<const double> gammas) {
  std::vector<std::size_t> idx(gammas.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return gammas[a] < gammas[b]; });
  return idx;
}

}  // namespace vortrack
