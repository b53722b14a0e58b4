#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vortrack/error.hpp"

namespace vortrack {

inline constexpr double kPi = 3.14159265358979323846;

/// Collision tolerance in length units; closer approaches are singular.
inline constexpr double kCollisionTolerance = 1e-6;

/// A point (or velocity) in the plane, read as the complex number x + iy.
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;

  constexpr PlanePoint& operator+=(PlanePoint o) { x += o.x; y += o.y; return *this; }
  constexpr PlanePoint& operator-=(PlanePoint o) { x -= o.x; y -= o.y; return *this; }
  constexpr PlanePoint& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr PlanePoint operator+(PlanePoint a, PlanePoint b) { return a += b; }
  friend constexpr PlanePoint operator-(PlanePoint a, PlanePoint b) { return a -= b; }
  friend constexpr PlanePoint operator*(double s, PlanePoint a) { return a *= s; }
  friend constexpr PlanePoint operator*(PlanePoint a, double s) { return a *= s; }
  friend constexpr bool operator==(PlanePoint, PlanePoint) = default;
};

constexpr double norm2(PlanePoint p) { return p.x * p.x + p.y * p.y; }
inline double norm(PlanePoint p) { return std::hypot(p.x, p.y); }
inline bool is_finite(PlanePoint p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Rotation about the origin by angle theta.
inline PlanePoint rotate(PlanePoint p, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Velocity induced at `at` by a point vortex of circulation `gamma` at `source`.
///
/// Conjugating dz*/dt = gamma / (2 pi i (z - z_s)) gives
/// dz/dt = gamma / (2 pi |d|^2) * (-d_y, d_x) with d = z - z_s.
inline PlanePoint induced_velocity(PlanePoint at, PlanePoint source, double gamma) {
  const double dx = at.x - source.x;
  const double dy = at.y - source.y;
  const double k = gamma / (2.0 * kPi * (dx * dx + dy * dy));
  return {-k * dy, k * dx};
}

/// Row-major Nt x N table of plane points (time along rows, entities along columns).
class PointTable {
 public:
  PointTable() = default;
  PointTable(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  PlanePoint& operator()(std::size_t k, std::size_t i) { return data_[k * cols_ + i]; }
  const PlanePoint& operator()(std::size_t k, std::size_t i) const { return data_[k * cols_ + i]; }

  std::span<PlanePoint> row(std::size_t k) { return {data_.data() + k * cols_, cols_}; }
  std::span<const PlanePoint> row(std::size_t k) const { return {data_.data() + k * cols_, cols_}; }

  /// Copy of column i as a time series.
  std::vector<PlanePoint> column(std::size_t i) const {
    std::vector<PlanePoint> out(rows_);
    for (std::size_t k = 0; k < rows_; ++k) out[k] = (*this)(k, i);
    return out;
  }

  std::span<const PlanePoint> data() const noexcept { return data_; }
  std::span<PlanePoint> data() noexcept { return data_; }

  friend bool operator==(const PointTable&, const PointTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<PlanePoint> data_;
};

/// Uniform sampling t_k = t0 + h k for k = 0..nt-1.
struct TimeGrid {
  double t0 = 0.0;
  double h = 1e-2;
  std::size_t nt = 1;

  double time(std::size_t k) const { return t0 + h * static_cast<double>(k); }
  double tf() const { return time(nt - 1); }

  void validate() const {
    require(std::isfinite(t0) && std::isfinite(h), "time grid must be finite");
    require(h > 0.0, "time grid spacing must be positive");
    require(nt >= 1, "time grid needs at least one sample");
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

}  // namespace vortrack
