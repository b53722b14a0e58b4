#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vortrack/dynamics.hpp"
#include "vortrack/error.hpp"
#include "vortrack/integrator.hpp"

namespace vortrack {

struct LyapunovOptions {
  double step = 1e-2;
  double delta0 = 1e-8;
};

/// Largest Lyapunov exponent of the vortex subsystem by two-trajectory
/// renormalization (Benettin): a copy offset by delta0 is evolved alongside the
/// reference and pulled back to distance delta0 every renorm_interval.
inline double lyapunov_max(const VortexSystem& vs, double horizon, double renorm_interval,
                           const LyapunovOptions& opt = {}) {
  vs.validate();
  require(renorm_interval > 0.0 && horizon >= renorm_interval, "need horizon >= renorm_interval > 0");
  require(opt.step > 0.0 && opt.delta0 > 0.0, "step and delta0 must be positive");

  const std::size_t n = vs.size();
  const auto steps_per_renorm =
      static_cast<std::size_t>(std::max(1.0, std::round(renorm_interval / opt.step)));
  const double dt = renorm_interval / static_cast<double>(steps_per_renorm);
  const auto renorms = static_cast<std::size_t>(std::floor(horizon / renorm_interval));

  std::vector<PlanePoint> ref = vs.positions, pert = vs.positions;
  // Fixed generic direction; a uniform shift would be a pure translation,
  // which is a symmetry and never separates.
  std::vector<PlanePoint> dir(n);
  double dn2 = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const double k = static_cast<double>(v);
    dir[v] = {1.0 + k, (v % 2 == 0 ? -0.5 : 0.75) - 0.3 * k};
    dn2 += norm2(dir[v]);
  }
  for (std::size_t v = 0; v < n; ++v) pert[v] += (opt.delta0 / std::sqrt(dn2)) * dir[v];

  FehlbergStepper a(vs.circulations), b(vs.circulations);
  std::vector<PlanePoint> none;
  double log_sum = 0.0;
  for (std::size_t r = 0; r < renorms; ++r) {
    for (std::size_t i = 0; i < steps_per_renorm; ++i) {
      a.step(ref, none, dt);
      b.step(pert, none, dt);
    }
    double d2 = 0.0;
    for (std::size_t v = 0; v < n; ++v) d2 += norm2(pert[v] - ref[v]);
    const double d = std::sqrt(d2);
    if (!(d > 0.0) || !std::isfinite(d)) fail(ErrorCode::NonFiniteState, "degenerate separation in Lyapunov estimate");
    log_sum += std::log(d / opt.delta0);
    const double scale = opt.delta0 / d;
    for (std::size_t v = 0; v < n; ++v) pert[v] = ref[v] + scale * (pert[v] - ref[v]);
  }
  return log_sum / (static_cast<double>(renorms) * renorm_interval);
}

}  // namespace vortrack
