#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vortrack/circulation.hpp"
#include "vortrack/dynamics.hpp"
#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"
#include "vortrack/io.hpp"
#include "vortrack/lyapunov.hpp"
#include "vortrack/reconstruction.hpp"

namespace vortrack {

struct Box {
  PlanePoint lo, hi;
  friend bool operator==(const Box&, const Box&) = default;
};

struct TracerConfig {
  std::size_t count = 20;
  std::uint64_t seed = 1;
  /// Minimum distance from every initial vortex position.
  double clearance = kCollisionTolerance;
  /// Placement region; defaults to the bounding box of the initial vortices.
  std::optional<Box> box;
};

struct NoiseConfig {
  double sigma = 0.01;
  std::uint64_t seed = 11;
};

struct SmoothingConfig {
  bool enabled = true;
  double kernel_sigma = 5.0;  // in samples
};

struct LyapunovConfig {
  double horizon = 1e4;
  double renorm_interval = 1.0;
  LyapunovOptions options;
};

struct ExperimentConfig {
  VortexSystem vortices;
  TracerConfig tracers;
  TimeGrid grid{0.0, 1e-2, 100001};
  int substeps = 1;
  NoiseConfig noise;
  SmoothingConfig smoothing;
  SolverConfig solver;
  std::optional<VortexSystem> initial_guess;
  ReconstructionConfig reconstruction;
  /// Fixed partition length; when absent it comes from the autocorrelations.
  std::optional<double> tau;
  LyapunovConfig lyapunov;
  std::string output_directory = "out";

  const VortexSystem& guess() const {
    if (!initial_guess) fail(ErrorCode::InvalidArgument, "config lacks circulation.initial_guess");
    return *initial_guess;
  }

  void validate() const {
    vortices.validate();
    grid.validate();
    require(tracers.count >= 1, "need at least one tracer");
    require(tracers.clearance >= kCollisionTolerance && std::isfinite(tracers.clearance),
            "tracer clearance must be at least the collision tolerance");
    require(substeps >= 1, "substeps must be at least 1");
    require(noise.sigma >= 0.0 && std::isfinite(noise.sigma), "noise sigma must be nonnegative");
    require(smoothing.kernel_sigma > 0.0, "kernel_sigma must be positive");
    solver.validate();
    reconstruction.validate();
    if (initial_guess) {
      require(initial_guess->size() == vortices.size(), "initial guess needs one entry per vortex");
      initial_guess->validate();
    }
    if (tau) require(*tau > 0.0 && std::isfinite(*tau), "tau must be positive");
    require(lyapunov.horizon >= lyapunov.renorm_interval && lyapunov.renorm_interval > 0.0,
            "lyapunov horizon must cover at least one renormalization interval");
  }
};

/// Uniform tracer placement over the box, rejecting candidates closer than
/// `clearance` to an initial vortex. Each candidate draws x, then y.
inline TracerSet place_tracers(const VortexSystem& vs, const TracerConfig& cfg) {
  vs.validate();
  Box box;
  if (cfg.box) {
    box = *cfg.box;
  } else {
    box = {vs.positions.front(), vs.positions.front()};
    for (const auto& z : vs.positions) {
      box.lo = {std::min(box.lo.x, z.x), std::min(box.lo.y, z.y)};
      box.hi = {std::max(box.hi.x, z.x), std::max(box.hi.y, z.y)};
    }
    // A degenerate side (one vortex, or collinear vortices) is widened by 1.
    if (box.hi.x - box.lo.x <= 0.0) { box.lo.x -= 1.0; box.hi.x += 1.0; }
    if (box.hi.y - box.lo.y <= 0.0) { box.lo.y -= 1.0; box.hi.y += 1.0; }
  }
  require(box.hi.x > box.lo.x && box.hi.y > box.lo.y, "tracer box must have positive area");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ux(box.lo.x, box.hi.x), uy(box.lo.y, box.hi.y);
  TracerSet ts;
  constexpr std::size_t kMaxDraws = 1000000;
  for (std::size_t draws = 0; ts.size() < cfg.count; ++draws) {
    if (draws >= kMaxDraws) fail(ErrorCode::InvalidArgument, "tracer clearance leaves no room in the placement box");
    const double x = ux(rng);
    const double y = uy(rng);
    const PlanePoint p{x, y};
    bool clear = true;
    for (const auto& z : vs.positions) clear = clear && norm(p - z) >= cfg.clearance;
    if (clear) ts.positions.push_back(p);
  }
  return ts;
}

namespace detail {

/// Field access on one JSON object that rejects unknown keys.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorCode::SchemaError, where_ + " must be an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorCode::SchemaError, "unknown key '" + where_ + "." + it.key() + "'");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& at(const std::string& key) {
    if (!has(key)) fail(ErrorCode::SchemaError, "missing key '" + where_ + "." + key + "'");
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      fail(ErrorCode::SchemaError, "'" + where_ + "." + key + "' has the wrong type");
    }
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline PlanePoint point_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorCode::SchemaError, where + " must be an [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json point_to_json(PlanePoint p) { return Json::array({p.x, p.y}); }

inline VortexSystem system_from_json(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  VortexSystem vs;
  r.get("circulations", vs.circulations);
  const Json& pos = r.at("positions");
  if (!pos.is_array()) fail(ErrorCode::SchemaError, where + ".positions must be an array");
  for (std::size_t i = 0; i < pos.size(); ++i) vs.positions.push_back(point_from_json(pos[i], where + ".positions"));
  if (vs.circulations.size() != vs.positions.size()) {
    fail(ErrorCode::SchemaError, where + " needs one circulation per position");
  }
  return vs;
}

inline Json system_to_json(const VortexSystem& vs) {
  Json pos = Json::array();
  for (const auto& p : vs.positions) pos.push_back(point_to_json(p));
  return {{"circulations", vs.circulations}, {"positions", pos}};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const Json& j) {
  using detail::ObjectReader;
  ExperimentConfig c;
  ObjectReader root(j, "config");
  c.vortices = detail::system_from_json(root.at("vortices"), "vortices");
  if (root.has("tracers")) {
    ObjectReader r(root.at("tracers"), "tracers");
    r.get("count", c.tracers.count);
    r.get("seed", c.tracers.seed);
    r.get("clearance", c.tracers.clearance);
    if (r.has("box")) {
      const Json& b = r.at("box");
      if (!b.is_array() || b.size() != 2) fail(ErrorCode::SchemaError, "tracers.box must be [[xmin, ymin], [xmax, ymax]]");
      c.tracers.box = Box{detail::point_from_json(b[0], "tracers.box"), detail::point_from_json(b[1], "tracers.box")};
    }
  }
  if (root.has("grid")) {
    ObjectReader r(root.at("grid"), "grid");
    r.get("t0", c.grid.t0);
    r.get("h", c.grid.h);
    r.get("nt", c.grid.nt);
    r.get("substeps", c.substeps);
  }
  if (root.has("noise")) {
    ObjectReader r(root.at("noise"), "noise");
    r.get("sigma", c.noise.sigma);
    r.get("seed", c.noise.seed);
  }
  if (root.has("smoothing")) {
    ObjectReader r(root.at("smoothing"), "smoothing");
    r.get("enabled", c.smoothing.enabled);
    r.get("kernel_sigma", c.smoothing.kernel_sigma);
  }
  if (root.has("circulation")) {
    ObjectReader r(root.at("circulation"), "circulation");
    SolverConfig& s = c.solver;
    r.get("epsilon", s.epsilon);
    r.get("max_iterations", s.max_iterations);
    r.get("residual_tolerance", s.residual_tolerance);
    r.get("step_tolerance", s.step_tolerance);
    r.get("seed", s.seed);
    r.get("passes", s.passes);
    if (r.has("aggregator")) s.aggregator = aggregator_from_string(r.at("aggregator").get<std::string>());
    if (r.has("tracking")) {
      ObjectReader t(r.at("tracking"), "circulation.tracking");
      if (t.has("mode")) s.tracking.mode = tracking_from_string(t.at("mode").get<std::string>());
      t.get("inflation", s.tracking.inflation);
      t.get("position_noise", s.tracking.position_noise);
      t.get("circulation_noise", s.tracking.circulation_noise);
      t.get("gate", s.tracking.gate);
      t.get("initial_position_sd", s.tracking.initial_position_sd);
      t.get("initial_circulation_rsd", s.tracking.initial_circulation_rsd);
    }
    if (r.has("initial_guess")) c.initial_guess = detail::system_from_json(r.at("initial_guess"), "circulation.initial_guess");
  }
  if (root.has("reconstruction")) {
    ObjectReader r(root.at("reconstruction"), "reconstruction");
    ReconstructionConfig& rc = c.reconstruction;
    r.get("alpha", rc.alpha);
    r.get("max_lag", rc.max_lag);
    r.get("max_iterations", rc.max_iterations);
    r.get("fd_step", rc.fd_step);
    r.get("step_tolerance", rc.step_tolerance);
    r.get("function_tolerance", rc.function_tolerance);
    r.get("continuation_start", rc.continuation_start);
    if (r.has("tau")) {
      double tau = 0.0;
      r.get("tau", tau);
      c.tau = tau;
    }
  }
  if (root.has("lyapunov")) {
    ObjectReader r(root.at("lyapunov"), "lyapunov");
    r.get("horizon", c.lyapunov.horizon);
    r.get("renorm_interval", c.lyapunov.renorm_interval);
    r.get("step", c.lyapunov.options.step);
    r.get("delta0", c.lyapunov.options.delta0);
  }
  if (root.has("output")) {
    ObjectReader r(root.at("output"), "output");
    r.get("directory", c.output_directory);
  }
  try {
    c.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::SchemaError, "invalid config: " + e.message());
    throw;
  }
  return c;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json tracers = {{"count", c.tracers.count}, {"seed", c.tracers.seed}, {"clearance", c.tracers.clearance}};
  if (c.tracers.box) {
    tracers["box"] = Json::array({detail::point_to_json(c.tracers.box->lo), detail::point_to_json(c.tracers.box->hi)});
  }
  const TrackingConfig& t = c.solver.tracking;
  Json circulation = {
      {"epsilon", c.solver.epsilon},
      {"max_iterations", c.solver.max_iterations},
      {"residual_tolerance", c.solver.residual_tolerance},
      {"step_tolerance", c.solver.step_tolerance},
      {"seed", c.solver.seed},
      {"passes", c.solver.passes},
      {"aggregator", std::string(to_string(c.solver.aggregator))},
      {"tracking",
       {{"mode", std::string(to_string(t.mode))},
        {"inflation", t.inflation},
        {"position_noise", t.position_noise},
        {"circulation_noise", t.circulation_noise},
        {"gate", t.gate},
        {"initial_position_sd", t.initial_position_sd},
        {"initial_circulation_rsd", t.initial_circulation_rsd}}},
  };
  if (c.initial_guess) circulation["initial_guess"] = detail::system_to_json(*c.initial_guess);
  const ReconstructionConfig& rc = c.reconstruction;
  Json reconstruction = {{"alpha", rc.alpha},
                         {"max_lag", rc.max_lag},
                         {"max_iterations", rc.max_iterations},
                         {"fd_step", rc.fd_step},
                         {"step_tolerance", rc.step_tolerance},
                         {"function_tolerance", rc.function_tolerance},
                         {"continuation_start", rc.continuation_start}};
  if (c.tau) reconstruction["tau"] = *c.tau;
  return {
      {"vortices", detail::system_to_json(c.vortices)},
      {"tracers", tracers},
      {"grid", {{"t0", c.grid.t0}, {"h", c.grid.h}, {"nt", c.grid.nt}, {"substeps", c.substeps}}},
      {"noise", {{"sigma", c.noise.sigma}, {"seed", c.noise.seed}}},
      {"smoothing", {{"enabled", c.smoothing.enabled}, {"kernel_sigma", c.smoothing.kernel_sigma}}},
      {"circulation", circulation},
      {"reconstruction", reconstruction},
      {"lyapunov",
       {{"horizon", c.lyapunov.horizon},
        {"renorm_interval", c.lyapunov.renorm_interval},
        {"step", c.lyapunov.options.step},
        {"delta0", c.lyapunov.options.delta0}}},
      {"output", {{"directory", c.output_directory}}},
  };
}

inline ExperimentConfig read_config(const std::string& path) { return config_from_json(read_json(path)); }

}  // namespace vortrack
