#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vortrack/dynamics.hpp"
#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"

namespace vortrack {

/// Fehlberg 4(5) tableau. The fifth-order weights advance the state; the
/// embedded fourth-order solution only feeds the error estimate.
struct FehlbergTableau {
  static constexpr int kStages = 6;
  static constexpr double a[kStages][kStages] = {
      {0, 0, 0, 0, 0, 0},
      {1.0 / 4, 0, 0, 0, 0, 0},
      {3.0 / 32, 9.0 / 32, 0, 0, 0, 0},
      {1932.0 / 2197, -7200.0 / 2197, 7296.0 / 2197, 0, 0, 0},
      {439.0 / 216, -8.0, 3680.0 / 513, -845.0 / 4104, 0, 0},
      {-8.0 / 27, 2.0, -3544.0 / 2565, 1859.0 / 4104, -11.0 / 40, 0},
  };
  static constexpr double b5[kStages] = {16.0 / 135, 0, 6656.0 / 12825, 28561.0 / 56430, -9.0 / 50, 2.0 / 55};
  static constexpr double b4[kStages] = {25.0 / 216, 0, 1408.0 / 2565, 2197.0 / 4104, -1.0 / 5, 0};
};

/// Fixed-step RKF45 stepper for the coupled vortex/tracer system.
///
/// Vortex stages never read tracer state, so the vortex trajectory is the same
/// whatever tracers ride along.
class FehlbergStepper {
 public:
  explicit FehlbergStepper(std::vector<double> circulations) : gammas_(std::move(circulations)) {}

  std::span<const double> circulations() const noexcept { return gammas_; }

  /// Advances both sets in place by h (h may be negative). Returns the
  /// max-norm of the embedded error estimate.
  double step(std::span<PlanePoint> vortices, std::span<PlanePoint> tracers, double h) {
    using T = FehlbergTableau;
    const std::size_t nv = vortices.size(), np = tracers.size();
    resize(nv, np);
    for (int s = 0; s < T::kStages; ++s) {
      for (std::size_t v = 0; v < nv; ++v) {
        PlanePoint z = vortices[v];
        for (int j = 0; j < s; ++j) z += (h * T::a[s][j]) * kv_[j][v];
        zv_[v] = z;
      }
      for (std::size_t p = 0; p < np; ++p) {
        PlanePoint z = tracers[p];
        for (int j = 0; j < s; ++j) z += (h * T::a[s][j]) * kp_[j][p];
        zp_[p] = z;
      }
      vortex_velocities(gammas_, zv_, kv_[s]);
      tracer_velocities(gammas_, zv_, zp_, kp_[s]);
    }
    double err = 0.0;
    auto combine = [&](std::span<PlanePoint> state, const std::vector<PlanePoint>(&k)[T::kStages]) {
      for (std::size_t i = 0; i < state.size(); ++i) {
        PlanePoint hi{}, lo{};
        for (int s = 0; s < T::kStages; ++s) {
          hi += T::b5[s] * k[s][i];
          lo += T::b4[s] * k[s][i];
        }
        const PlanePoint diff = h * (hi - lo);
        err = std::max({err, std::abs(diff.x), std::abs(diff.y)});
        state[i] += h * hi;
        if (!is_finite(state[i])) fail(ErrorCode::NonFiniteState, "integrated state became non-finite");
      }
    };
    combine(vortices, kv_);
    combine(tracers, kp_);
    return err;
  }

 private:
  void resize(std::size_t nv, std::size_t np) {
    zv_.resize(nv);
    zp_.resize(np);
    for (auto& k : kv_) k.resize(nv);
    for (auto& k : kp_) k.resize(np);
  }

  std::vector<double> gammas_;
  std::vector<PlanePoint> zv_, zp_;
  std::vector<PlanePoint> kv_[FehlbergTableau::kStages];
  std::vector<PlanePoint> kp_[FehlbergTableau::kStages];
};

struct SimulationRecord {
  TimeGrid grid;
  PointTable vortex_history;  // nt x N_v
  PointTable tracer_history;  // nt x N_p
  std::vector<double> circulations;
  /// Largest embedded RKF error estimate seen; diagnostic only.
  double max_error_estimate = 0.0;
};

/// Jointly integrates vortices and tracers, recording every grid sample.
/// `substeps` internal steps of h/substeps are taken between samples.
inline SimulationRecord integrate(const VortexSystem& vs, const TracerSet& ts, const TimeGrid& grid,
                                  int substeps = 1) {
  vs.validate();
  grid.validate();
  require(substeps >= 1, "substeps must be at least 1");
  for (const auto& p : ts.positions) {
    if (!is_finite(p)) fail(ErrorCode::NonFiniteState, "tracer position is not finite");
  }

  SimulationRecord rec{grid, PointTable(grid.nt, vs.size()), PointTable(grid.nt, ts.size()), vs.circulations, 0.0};
  std::vector<PlanePoint> zv = vs.positions, zp = ts.positions;
  FehlbergStepper stepper(vs.circulations);
  const double dt = grid.h / substeps;

  auto store = [&](std::size_t k) {
    std::copy(zv.begin(), zv.end(), rec.vortex_history.row(k).begin());
    std::copy(zp.begin(), zp.end(), rec.tracer_history.row(k).begin());
  };
  store(0);
  for (std::size_t k = 1; k < grid.nt; ++k) {
    try {
      for (int s = 0; s < substeps; ++s) {
        rec.max_error_estimate = std::max(rec.max_error_estimate, stepper.step(zv, zp, dt));
      }
    } catch (Error& e) {
      if (!e.time) e.time = grid.time(k - 1);
      throw;
    }
    store(k);
  }
  return rec;
}

/// Vortex-only advance by `steps` steps of size h (negative h integrates backwards).
inline std::vector<PlanePoint> advance_vortices(const VortexSystem& vs, double h, std::size_t steps) {
  vs.validate();
  std::vector<PlanePoint> z = vs.positions;
  std::vector<PlanePoint> none;
  FehlbergStepper stepper(vs.circulations);
  for (std::size_t i = 0; i < steps; ++i) stepper.step(z, none, h);
  return z;
}

}  // namespace vortrack
