#pragma once

#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vortrack/vortrack.hpp"

namespace vt_test {

using vortrack::PlanePoint;
using vortrack::VortexSystem;
using cld = std::complex<long double>;

inline VortexSystem reference() {
  return {{1.0, 2.0, 3.0, 4.0}, {{2.0, 0.0}, {-1.0, -1.0}, {0.5, 0.5}, {-2.0, 3.0}}};
}

inline cld to_c(PlanePoint p) { return {p.x, p.y}; }

// Velocity at z induced by the given vortices, skipping index `skip`:
// conj( sum Gamma / (2 pi i (z - z_s)) ), in long double complex arithmetic.
inline cld oracle_velocity(const VortexSystem& vs, cld z, std::size_t skip = static_cast<std::size_t>(-1)) {
  const long double pi = 3.141592653589793238462643383279502884L;
  cld conj_vel = 0;
  for (std::size_t s = 0; s < vs.size(); ++s) {
    if (s == skip) continue;
    conj_vel += static_cast<long double>(vs.circulations[s]) / (2.0L * pi * cld(0, 1) * (z - to_c(vs.positions[s])));
  }
  return std::conj(conj_vel);
}

struct OracleInvariants {
  long double h, q, p, i;
};

inline OracleInvariants oracle_invariants(const VortexSystem& vs) {
  const long double pi = 3.141592653589793238462643383279502884L;
  OracleInvariants o{0, 0, 0, 0};
  for (std::size_t v = 0; v < vs.size(); ++v) {
    const cld z = to_c(vs.positions[v]);
    const long double g = vs.circulations[v];
    o.q += g * z.real();
    o.p += g * z.imag();
    o.i += g * std::norm(z);
    for (std::size_t s = 0; s < vs.size(); ++s) {
      if (s == v) continue;
      o.h -= g * vs.circulations[s] * std::log(std::abs(z - to_c(vs.positions[s]))) / (4.0L * pi);
    }
  }
  return o;
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("vortrack_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

/// Uniform tracers in [-r, r]^2 kept at least `clearance` from every vortex.
inline std::vector<PlanePoint> random_tracers(std::mt19937_64& rng, const VortexSystem& vs, std::size_t n,
                                              double r = 2.5, double clearance = 0.3) {
  std::uniform_real_distribution<double> u(-r, r);
  std::vector<PlanePoint> out;
  while (out.size() < n) {
    const PlanePoint p{u(rng), u(rng)};
    bool ok = true;
    for (const auto& z : vs.positions) ok = ok && vortrack::norm(p - z) >= clearance;
    if (ok) out.push_back(p);
  }
  return out;
}

}  // namespace vt_test
