#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"

namespace vortrack {

/// Raw/Noisy/Smoothed tag tracer data; Reconstructed tags recovered vortex tracks.
enum class Provenance { Raw, Noisy, Smoothed, Reconstructed };

constexpr std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Raw: return "raw";
    case Provenance::Noisy: return "noisy";
    case Provenance::Smoothed: return "smoothed";
    case Provenance::Reconstructed: return "reconstructed";
  }
  return "raw";
}

inline Provenance provenance_from_string(std::string_view s) {
  if (s == "raw") return Provenance::Raw;
  if (s == "noisy") return Provenance::Noisy;
  if (s == "smoothed") return Provenance::Smoothed;
  if (s == "reconstructed") return Provenance::Reconstructed;
  fail(ErrorCode::SchemaError, "unknown provenance tag '" + std::string(s) + "'");
}

/// Sampled tracer positions on a uniform grid.
struct TrajectoryEnsemble {
  TimeGrid grid;
  PointTable tracers;  // nt x N_p
  Provenance provenance = Provenance::Raw;

  std::size_t num_tracers() const noexcept { return tracers.cols(); }

  void validate() const {
    grid.validate();
    if (tracers.rows() != grid.nt) fail(ErrorCode::ShapeMismatch, "trajectory rows do not match the grid");
    for (const auto& p : tracers.data()) {
      if (!is_finite(p)) fail(ErrorCode::NonFiniteState, "trajectory sample is not finite");
    }
  }
};

struct VelocityEnsemble {
  TimeGrid grid;
  PointTable velocities;  // nt x N_p
};

/// Adds i.i.d. N(0, sigma^2) to every coordinate; draws run over samples in
/// time order, tracers within a sample, x before y.
inline TrajectoryEnsemble add_noise(const TrajectoryEnsemble& ens, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), "noise sigma must be finite and nonnegative");
  require(ens.provenance == Provenance::Raw, "noise is applied to raw trajectories only");
  TrajectoryEnsemble out = ens;
  out.provenance = Provenance::Noisy;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& p : out.tracers.data()) {
    p.x += gauss(rng);
    p.y += gauss(rng);
  }
  return out;
}

inline std::size_t gaussian_radius(double kernel_sigma) {
  return static_cast<std::size_t>(std::ceil(4.0 * kernel_sigma));
}

/// Truncated Gaussian convolution along time, per coordinate. Near the ends
/// the kernel is renormalized over the samples that exist.
inline TrajectoryEnsemble gaussian_smooth(const TrajectoryEnsemble& ens, double kernel_sigma) {
  require(kernel_sigma > 0.0 && std::isfinite(kernel_sigma), "kernel_sigma must be positive");
  require(ens.provenance != Provenance::Smoothed, "trajectory is already smoothed");
  const std::size_t radius = gaussian_radius(kernel_sigma);
  const std::size_t nt = ens.tracers.rows();
  if (nt < radius) {
    fail(ErrorCode::GridTooShort, "need at least " + std::to_string(radius) + " samples for the smoothing kernel");
  }

  std::vector<double> w(radius + 1);
  for (std::size_t i = 0; i <= radius; ++i) {
    const double d = static_cast<double>(i);
    w[i] = std::exp(-0.5 * d * d / (kernel_sigma * kernel_sigma));
  }

  TrajectoryEnsemble out = ens;
  out.provenance = Provenance::Smoothed;
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const auto n = static_cast<std::ptrdiff_t>(nt);
  for (std::size_t p = 0; p < ens.tracers.cols(); ++p) {
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, k - r);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, k + r);
      PlanePoint acc{};
      double wsum = 0.0;
      // Pair k-d with k+d so symmetric contributions are added together.
      for (std::ptrdiff_t d = 0; d <= r; ++d) {
        const double wd = w[static_cast<std::size_t>(d)];
        if (d == 0) {
          acc += wd * ens.tracers(static_cast<std::size_t>(k), p);
          wsum += wd;
          continue;
        }
        const bool left = k - d >= lo, right = k + d <= hi;
        if (left && right) {
          const PlanePoint a = ens.tracers(static_cast<std::size_t>(k - d), p);
          const PlanePoint b = ens.tracers(static_cast<std::size_t>(k + d), p);
          acc += wd * (a + b);
          wsum += 2.0 * wd;
        } else if (left) {
          acc += wd * ens.tracers(static_cast<std::size_t>(k - d), p);
          wsum += wd;
        } else if (right) {
          acc += wd * ens.tracers(static_cast<std::size_t>(k + d), p);
          wsum += wd;
        }
      }
      out.tracers(static_cast<std::size_t>(k), p) = (1.0 / wsum) * acc;
    }
  }
  return out;
}

/// Fourth-order finite-difference velocities: five-point central stencil in
/// the interior, one-sided fourth-order stencils on the two samples at each end.
inline VelocityEnsemble fd_velocity(const TrajectoryEnsemble& ens) {
  const std::size_t nt = ens.tracers.rows();
  if (nt < 5) fail(ErrorCode::GridTooShort, "finite-difference velocities need at least 5 samples");
  const double inv = 1.0 / (12.0 * ens.grid.h);
  VelocityEnsemble out{ens.grid, PointTable(nt, ens.tracers.cols())};
  for (std::size_t p = 0; p < ens.tracers.cols(); ++p) {
    auto f = [&](std::size_t k) { return ens.tracers(k, p); };
    auto& v = out.velocities;
    v(0, p) = inv * (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4));
    v(1, p) = inv * (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4));
    for (std::size_t k = 2; k + 2 < nt; ++k) {
      v(k, p) = inv * (f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2));
    }
    const std::size_t e = nt - 1;
    v(e - 1, p) = inv * (3.0 * f(e) + 10.0 * f(e - 1) - 18.0 * f(e - 2) + 6.0 * f(e - 3) - f(e - 4));
    v(e, p) = inv * (25.0 * f(e) - 48.0 * f(e - 1) + 36.0 * f(e - 2) - 16.0 * f(e - 3) + 3.0 * f(e - 4));
  }
  return out;
}

struct AutocorrelationCurve {
  std::vector<std::size_t> lags;  // in samples
  std::vector<double> values;     // |rho(lag)|
};

/// |rho(l)| of a complex series, mean removed, biased (1/N) normalization,
/// for l = 0..max_lag. Computed by zero-padded FFT.
inline AutocorrelationCurve autocorrelation(std::span<const PlanePoint> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  require(n > 0 && max_lag < n, "max_lag must be below the series length");

  PlanePoint mean{};
  for (const auto& z : series) mean += z;
  mean *= 1.0 / static_cast<double>(n);
  double var = 0.0;
  for (const auto& z : series) var += norm2(z - mean);
  var /= static_cast<double>(n);
  if (var < 1e-15) fail(ErrorCode::DegenerateSignal, "series variance below 1e-15");

  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<std::complex<double>> buf(m);
  for (std::size_t k = 0; k < n; ++k) buf[k] = {series[k].x - mean.x, series[k].y - mean.y};
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  // The FFTW planner is not thread-safe; execution is.
  static std::mutex planner_mutex;
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(planner_mutex);
    fwd = fftw_plan_dft_1d(static_cast<int>(m), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(static_cast<int>(m), data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (auto& c : buf) c = std::norm(c);
  fftw_execute(bwd);
  {
    std::lock_guard lock(planner_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }

  // buf[l] / m = sum_k (z_{k+l} - mu)(z_k - mu)^*, whose modulus equals that of
  // the conjugate-ordered sum.
  const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(n) * var);
  AutocorrelationCurve out;
  out.lags.resize(max_lag + 1);
  out.values.resize(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) {
    out.lags[l] = l;
    out.values[l] = l == 0 ? 1.0 : std::abs(buf[l]) * scale;
  }
  return out;
}

inline AutocorrelationCurve autocorrelation(const TrajectoryEnsemble& ens, std::size_t p, std::size_t max_lag) {
  require(p < ens.num_tracers(), "tracer index out of range");
  return autocorrelation(ens.tracers.column(p), max_lag);
}

/// Smallest lag L with |rho(l)| <= alpha for every l in [L, max_lag].
/// Returns max_lag + 1 when |rho(max_lag)| itself exceeds alpha.
inline std::size_t decorrelation_lag(const AutocorrelationCurve& curve, double alpha) {
  std::size_t l = curve.values.size();
  while (l > 0 && curve.values[l - 1] <= alpha) --l;
  return l;
}

struct DecorrelationResult {
  double tau = 0.0;               // min over decorrelating tracers, time units
  std::vector<double> per_tracer;  // tau_p; +inf when the tracer stays correlated up to max_lag
};

/// tau = min_p tau_p. Tracers that remain above alpha at max_lag (typically
/// ones trapped in orbit around a single vortex) cannot set the minimum and
/// are reported with tau_p = +inf; NoDecorrelation is raised only when no
/// tracer decorrelates at all.
inline DecorrelationResult decorrelation_times(const TrajectoryEnsemble& ens, double alpha, std::size_t max_lag) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(ens.num_tracers() > 0, "no tracers");
  DecorrelationResult res;
  res.tau = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < ens.num_tracers(); ++p) {
    const auto curve = autocorrelation(ens, p, max_lag);
    const std::size_t lag = decorrelation_lag(curve, alpha);
    // Lag 0 is 1 > alpha, so lag >= 1.
    const double tau_p = lag > max_lag ? std::numeric_limits<double>::infinity()
                                       : ens.grid.h * static_cast<double>(lag);
    res.per_tracer.push_back(tau_p);
    res.tau = std::min(res.tau, tau_p);
  }
  if (!std::isfinite(res.tau)) {
    fail(ErrorCode::NoDecorrelation, "no tracer drops below alpha within max_lag " + std::to_string(max_lag));
  }
  return res;
}

inline double decorrelation_time(const TrajectoryEnsemble& ens, double alpha, std::size_t max_lag) {
  return decorrelation_times(ens, alpha, max_lag).tau;
}

}  // namespace vortrack
