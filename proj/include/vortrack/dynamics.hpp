#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"

namespace vortrack {

/// Circulations and current positions of N_v point vortices.
struct VortexSystem {
  std::vector<double> circulations;
  std::vector<PlanePoint> positions;

  std::size_t size() const noexcept { return positions.size(); }

  void validate() const {
    require(!positions.empty(), "a vortex system needs at least one vortex");
    require(circulations.size() == positions.size(), "one circulation per vortex required");
    for (double g : circulations) require(std::isfinite(g) && g != 0.0, "circulations must be finite and nonzero");
    for (const auto& p : positions) {
      if (!is_finite(p)) fail(ErrorCode::NonFiniteState, "vortex position is not finite");
    }
  }
};

struct TracerSet {
  std::vector<PlanePoint> positions;
  std::size_t size() const noexcept { return positions.size(); }
};

namespace detail {

inline void check_separation(PlanePoint a, PlanePoint b, const char* what) {
  if (norm2(a - b) <= kCollisionTolerance * kCollisionTolerance) {
    fail(ErrorCode::SingularConfiguration, std::string(what) + " closer than collision tolerance");
  }
}

}  // namespace detail

/// dz_v/dt for every vortex; the self term is excluded.
inline void vortex_velocities(std::span<const double> gammas, std::span<const PlanePoint> z,
                              std::span<PlanePoint> out) {
  const std::size_t n = z.size();
  for (std::size_t v = 0; v < n; ++v) out[v] = {};
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t s = v + 1; s < n; ++s) {
      detail::check_separation(z[v], z[s], "two vortices");
      // Pairwise antisymmetry: d and 1/|d|^2 shared by both directions.
      const double dx = z[v].x - z[s].x;
      const double dy = z[v].y - z[s].y;
      const double inv = 1.0 / (2.0 * kPi * (dx * dx + dy * dy));
      out[v].x -= gammas[s] * inv * dy;
      out[v].y += gammas[s] * inv * dx;
      out[s].x += gammas[v] * inv * dy;
      out[s].y -= gammas[v] * inv * dx;
    }
  }
}

inline std::vector<PlanePoint> vortex_velocities(const VortexSystem& vs) {
  vs.validate();
  std::vector<PlanePoint> out(vs.size());
  vortex_velocities(vs.circulations, vs.positions, out);
  return out;
}

/// dz_p/dt for every tracer under all vortices.
inline void tracer_velocities(std::span<const double> gammas, std::span<const PlanePoint> vortices,
                              std::span<const PlanePoint> tracers, std::span<PlanePoint> out) {
  for (std::size_t p = 0; p < tracers.size(); ++p) {
    PlanePoint u{};
    for (std::size_t v = 0; v < vortices.size(); ++v) {
      detail::check_separation(tracers[p], vortices[v], "tracer and vortex");
      u += induced_velocity(tracers[p], vortices[v], gammas[v]);
    }
    out[p] = u;
  }
}

/// Unlike VortexSystem::validate this accepts zero circulations, which simply
/// induce no motion.
inline std::vector<PlanePoint> tracer_velocities(const VortexSystem& vs, const TracerSet& ts) {
  require(vs.circulations.size() == vs.positions.size(), "one circulation per vortex required");
  std::vector<PlanePoint> out(ts.size());
  tracer_velocities(vs.circulations, vs.positions, ts.positions, out);
  return out;
}

/// First integrals of the vortex motion.
struct ConservedQuantities {
  double hamiltonian = 0.0;
  double impulse_x = 0.0;  // Q = sum Gamma_v x_v
  double impulse_y = 0.0;  // P = sum Gamma_v y_v
  double angular_impulse = 0.0;
};

inline ConservedQuantities conserved_quantities(std::span<const double> gammas, std::span<const PlanePoint> z) {
  ConservedQuantities q;
  for (std::size_t v = 0; v < z.size(); ++v) {
    q.impulse_x += gammas[v] * z[v].x;
    q.impulse_y += gammas[v] * z[v].y;
    q.angular_impulse += gammas[v] * norm2(z[v]);
    for (std::size_t s = v + 1; s < z.size(); ++s) {
      detail::check_separation(z[v], z[s], "two vortices");
      // Ordered-pair sum counts each pair twice.
      q.hamiltonian -= 2.0 * gammas[v] * gammas[s] * std::log(norm(z[v] - z[s])) / (4.0 * kPi);
    }
  }
  return q;
}

inline ConservedQuantities conserved_quantities(const VortexSystem& vs) {
  vs.validate();
  return conserved_quantities(vs.circulations, vs.positions);
}

}  // namespace vortrack
