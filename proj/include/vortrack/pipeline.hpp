#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vortrack/circulation.hpp"
#include "vortrack/config.hpp"
#include "vortrack/integrator.hpp"
#include "vortrack/io.hpp"
#include "vortrack/lyapunov.hpp"
#include "vortrack/reconstruction.hpp"
#include "vortrack/signal.hpp"

namespace vortrack {

// File names written by each stage inside the output directory.
namespace files {
inline constexpr const char* kVortices = "vortices.csv";
inline constexpr const char* kTracersRaw = "tracers_raw.csv";
inline constexpr const char* kTracersNoisy = "tracers_noisy.csv";
inline constexpr const char* kTracersSmoothed = "tracers_smoothed.csv";
inline constexpr const char* kVelocities = "velocities.csv";
inline constexpr const char* kCirculations = "circulations.json";
inline constexpr const char* kSnapshots = "snapshots.csv";
inline constexpr const char* kRecovered = "vortices_recovered.csv";
inline constexpr const char* kReconstruction = "reconstruction.json";
inline constexpr const char* kErrors = "errors.csv";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kLyapunov = "lyapunov.json";
inline constexpr const char* kAutocorr = "autocorr.json";
inline constexpr const char* kAutocorrCurves = "autocorr.csv";
inline constexpr const char* kConfig = "config.json";
}  // namespace files

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

namespace detail {

inline Json points_json(std::span<const PlanePoint> z) {
  Json a = Json::array();
  for (const auto& p : z) a.push_back(point_to_json(p));
  return a;
}

/// Non-finite values become null in JSON; keep them explicit as strings instead.
inline Json number_json(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline Json numbers_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simulation and signal stages

struct SimulationOutput {
  SimulationRecord record;
  TrajectoryData vortices;  // ground truth tracks, vortex rows only
  TrajectoryData tracers;   // raw tracer tracks
};

inline SimulationOutput simulate_stage(const ExperimentConfig& cfg) {
  cfg.validate();
  const TracerSet ts = place_tracers(cfg.vortices, cfg.tracers);
  SimulationOutput out;
  out.record = integrate(cfg.vortices, ts, cfg.grid, cfg.substeps);
  const std::vector<std::pair<std::string, std::uint64_t>> seeds{{"placement", cfg.tracers.seed}};
  out.vortices = {cfg.grid, Provenance::Raw, seeds, cfg.vortices.circulations, {},
                  PointTable(cfg.grid.nt, 0), out.record.vortex_history};
  out.tracers = {cfg.grid, Provenance::Raw, seeds, {}, {}, out.record.tracer_history, PointTable(cfg.grid.nt, 0)};
  return out;
}

/// Tracer file with only the tracer columns of `in`, the given tag and an extra seed.
inline TrajectoryData tracer_data(const TrajectoryData& in, const TrajectoryEnsemble& ens,
                                  std::optional<std::pair<std::string, std::uint64_t>> seed = std::nullopt) {
  TrajectoryData out{ens.grid, ens.provenance, in.seeds, {}, {}, ens.tracers, PointTable(ens.grid.nt, 0)};
  if (seed) out.seeds.push_back(*seed);
  return out;
}

inline TrajectoryData corrupt_stage(const TrajectoryData& raw, double sigma, std::uint64_t seed) {
  return tracer_data(raw, add_noise(raw.ensemble(), sigma, seed), std::pair<std::string, std::uint64_t>{"noise", seed});
}

inline TrajectoryData smooth_stage(const TrajectoryData& noisy, double kernel_sigma) {
  return tracer_data(noisy, gaussian_smooth(noisy.ensemble(), kernel_sigma));
}

inline VelocityData velocity_stage(const TrajectoryData& tracers) {
  const TrajectoryEnsemble ens = tracers.ensemble();
  return {ens.grid, ens.provenance, fd_velocity(ens).velocities};
}

// ---------------------------------------------------------------------------
// Circulation estimation

struct CirculationReport {
  CirculationEstimate estimate;
  Json json;
  std::vector<std::string> snapshot_columns;
  std::vector<std::vector<double>> snapshot_table;
};

/// Relative errors |est - true| / |true| after pairing by circulation rank.
inline std::vector<double> relative_circulation_errors(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size()) fail(ErrorCode::ShapeMismatch, "estimated and true circulation counts differ");
  const auto eo = circulation_order(est);
  const auto to = circulation_order(truth);
  std::vector<double> err(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    err[to[i]] = std::abs(est[eo[i]] - truth[to[i]]) / std::abs(truth[to[i]]);
  }
  return err;
}

inline CirculationReport circulation_stage(const TrajectoryData& tracers, const VelocityData& velocities,
                                           const VortexSystem& guess, const SolverConfig& solver,
                                           const std::vector<double>* truth = nullptr) {
  const TrajectoryEnsemble ens = tracers.ensemble();
  if (!(velocities.grid == ens.grid)) fail(ErrorCode::ShapeMismatch, "velocity and trajectory grids differ");
  CirculationReport rep;
  rep.estimate = estimate_circulations(ens, velocities.ensemble(), guess, solver);
  const CirculationEstimate& est = rep.estimate;
  const std::size_t nv = guess.size();

  std::vector<std::size_t> retained(nv, 0);
  for (const auto& row : est.retained) {
    for (std::size_t v = 0; v < nv; ++v) retained[v] += row[v] ? 1 : 0;
  }
  Json& j = rep.json;
  j["aggregator"] = std::string(to_string(est.aggregator));
  j["circulations"] = detail::numbers_json(est.circulations);
  j["mean"] = detail::numbers_json(est.mean_circulations);
  j["median"] = detail::numbers_json(est.median_circulations);
  j["initial_positions"] = detail::points_json(est.initial_positions());
  j["snapshots"] = est.per_snapshot.size();
  j["converged_snapshots"] = est.converged_snapshots;
  j["retained"] = retained;
  j["tracking"] = std::string(to_string(solver.tracking.mode));
  j["seed"] = solver.seed;
  j["input_provenance"] = std::string(to_string(tracers.provenance));
  if (truth) {
    const auto err = relative_circulation_errors(est.circulations, *truth);
    j["truth"] = {{"circulations", detail::numbers_json(*truth)},
                  {"relative_error", detail::numbers_json(err)},
                  {"max_relative_error", *std::max_element(err.begin(), err.end())},
                  {"mean_relative_error", detail::numbers_json(relative_circulation_errors(est.mean_circulations, *truth))},
                  {"median_relative_error",
                   detail::numbers_json(relative_circulation_errors(est.median_circulations, *truth))}};
  }

  rep.snapshot_columns = {"time", "converged"};
  for (std::size_t v = 0; v < nv; ++v) rep.snapshot_columns.push_back("gamma_" + std::to_string(v));
  for (std::size_t v = 0; v < nv; ++v) {
    rep.snapshot_columns.push_back("x_" + std::to_string(v));
    rep.snapshot_columns.push_back("y_" + std::to_string(v));
  }
  for (std::size_t v = 0; v < nv; ++v) rep.snapshot_columns.push_back("retained_" + std::to_string(v));
  rep.snapshot_table.assign(rep.snapshot_columns.size(), std::vector<double>(est.per_snapshot.size()));
  for (std::size_t k = 0; k < est.per_snapshot.size(); ++k) {
    const SnapshotSolution& s = est.per_snapshot[k];
    std::size_t c = 0;
    rep.snapshot_table[c++][k] = ens.grid.time(s.k);
    rep.snapshot_table[c++][k] = s.converged ? 1.0 : 0.0;
    for (std::size_t v = 0; v < nv; ++v) rep.snapshot_table[c++][k] = s.circulations[v];
    for (std::size_t v = 0; v < nv; ++v) {
      rep.snapshot_table[c++][k] = s.positions[v].x;
      rep.snapshot_table[c++][k] = s.positions[v].y;
    }
    for (std::size_t v = 0; v < nv; ++v) rep.snapshot_table[c++][k] = est.retained[k][v] ? 1.0 : 0.0;
  }
  return rep;
}

inline void write_circulation_report(const std::string& dir, const CirculationReport& rep) {
  write_json(join_path(dir, files::kCirculations), rep.json);
  write_columns(join_path(dir, files::kSnapshots), rep.snapshot_columns, rep.snapshot_table);
}

/// Circulations and starting positions read back from a circulation report.
inline VortexSystem read_circulation_report(const std::string& path) {
  const Json j = read_json(path);
  try {
    VortexSystem vs;
    vs.circulations = j.at("circulations").get<std::vector<double>>();
    for (const auto& p : j.at("initial_positions")) vs.positions.push_back(detail::point_from_json(p, path));
    if (vs.positions.size() != vs.circulations.size()) fail(ErrorCode::SchemaError, path + ": size mismatch");
    return vs;
  } catch (const Json::exception& e) {
    fail(ErrorCode::SchemaError, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvaluationReport {
  ErrorSeries errors;
  std::optional<double> drop_fraction;
  Json json;
  std::vector<std::vector<double>> columns;  // time, e_k, boundary
};

inline EvaluationReport evaluation_stage(const TrajectoryData& recovered, const TrajectoryData& truth) {
  if (!(recovered.grid == truth.grid)) fail(ErrorCode::ShapeMismatch, "recovered and true grids differ");
  auto gammas = [](const TrajectoryData& d) {
    return d.circulations.empty() ? std::vector<double>(d.vortices.cols(), 1.0) : d.circulations;
  };
  EvaluationReport rep;
  rep.errors = evaluate(recovered.vortices, gammas(recovered), truth.vortices, gammas(truth));
  const auto& e = rep.errors.per_step;
  std::vector<double> time(e.size()), boundary(e.size(), 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) time[k] = recovered.grid.time(k);
  for (auto b : recovered.boundaries) {
    if (b < boundary.size()) boundary[b] = 1.0;
  }
  rep.columns = {time, e, boundary};

  Json& j = rep.json;
  j["total_relative_error"] = detail::number_json(rep.errors.total);
  j["max_step_error"] = detail::number_json(*std::max_element(e.begin(), e.end()));
  j["final_step_error"] = detail::number_json(e.back());
  j["samples"] = e.size();
  if (recovered.boundaries.size() >= 2) {
    std::size_t drops = 0;
    for (std::size_t i = 1; i < recovered.boundaries.size(); ++i) {
      const auto k = recovered.boundaries[i];
      if (k == 0 || k >= e.size()) fail(ErrorCode::SchemaError, "partition boundary outside the grid");
      if (e[k] <= e[k - 1]) ++drops;
    }
    rep.drop_fraction = static_cast<double>(drops) / static_cast<double>(recovered.boundaries.size() - 1);
    j["boundary_drop_fraction"] = *rep.drop_fraction;
  }
  return rep;
}

inline void write_evaluation_report(const std::string& dir, const EvaluationReport& rep) {
  write_json(join_path(dir, files::kMetrics), rep.json);
  write_columns(join_path(dir, files::kErrors), {"time", "error", "boundary"}, rep.columns);
}

// ---------------------------------------------------------------------------
// Reconstruction

struct ReconstructionReport {
  ReconstructionResult result;
  TrajectoryData recovered;
  Json json;
};

inline ReconstructionReport reconstruction_stage(const TrajectoryData& tracers, const VortexSystem& estimate,
                                                 const ReconstructionConfig& cfg, std::optional<double> tau) {
  const TrajectoryEnsemble ens = tracers.ensemble();
  ReconstructionReport rep;
  rep.result = tau ? reconstruct_trajectories(ens, estimate.circulations, build_partition(ens.grid, *tau), estimate.positions, cfg)
                   : reconstruct_trajectories(ens, estimate.circulations, estimate.positions, cfg);
  const ReconstructionResult& r = rep.result;

  std::vector<std::size_t> boundaries;
  for (const auto& iv : r.plan.intervals) boundaries.push_back(iv.first);
  rep.recovered = {ens.grid, Provenance::Reconstructed, tracers.seeds, r.circulations, boundaries,
                   PointTable(ens.grid.nt, 0), r.trajectory};

  Json& j = rep.json;
  j["tau"] = r.plan.tau;
  j["steps_per_interval"] = r.plan.steps_per_interval;
  j["intervals"] = r.plan.size();
  j["boundaries"] = boundaries;
  j["circulations"] = detail::numbers_json(r.circulations);
  if (!r.per_tracer_tau.empty()) j["per_tracer_tau"] = detail::numbers_json(r.per_tracer_tau);
  Json subs = Json::array();
  std::size_t converged = 0, penalized = 0;
  for (const auto& s : r.intervals) {
    converged += s.converged ? 1 : 0;
    penalized += s.penalized ? 1 : 0;
    subs.push_back({{"j", s.j},
                    {"t_start", r.plan.intervals[s.j].t_start},
                    {"t_end", r.plan.intervals[s.j].t_end},
                    {"objective", detail::number_json(s.objective)},
                    {"initial_objective", detail::number_json(s.initial_objective)},
                    {"iterations", s.iterations},
                    {"converged", s.converged},
                    {"penalized", s.penalized},
                    {"start", detail::points_json(s.start)}});
  }
  j["converged_intervals"] = converged;
  j["penalized_intervals"] = penalized;
  j["subproblems"] = subs;
  return rep;
}

inline void write_reconstruction_report(const std::string& dir, const ReconstructionReport& rep) {
  write_trajectory(join_path(dir, files::kRecovered), rep.recovered);
  write_json(join_path(dir, files::kReconstruction), rep.json);
}

// ---------------------------------------------------------------------------
// Diagnostics

inline Json lyapunov_stage(const VortexSystem& vs, const LyapunovConfig& cfg) {
  const double lambda = lyapunov_max(vs, cfg.horizon, cfg.renorm_interval, cfg.options);
  return {{"lambda_max", lambda},
          {"horizon", cfg.horizon},
          {"renorm_interval", cfg.renorm_interval},
          {"step", cfg.options.step},
          {"delta0", cfg.options.delta0},
          {"predictability_time", 1.0 / lambda}};
}

struct AutocorrReport {
  DecorrelationResult decorrelation;
  Json json;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> curves;  // lag time, then |rho| per tracer
};

inline AutocorrReport autocorr_stage(const TrajectoryData& tracers, double alpha, std::size_t max_lag) {
  const TrajectoryEnsemble ens = tracers.ensemble();
  require(ens.grid.nt >= 2, "autocorrelation needs at least two samples");
  max_lag = std::min(max_lag, ens.grid.nt - 1);
  AutocorrReport rep;
  rep.decorrelation = decorrelation_times(ens, alpha, max_lag);
  rep.columns = {"lag_time"};
  rep.curves.emplace_back(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) rep.curves[0][l] = ens.grid.h * static_cast<double>(l);
  for (std::size_t p = 0; p < ens.num_tracers(); ++p) {
    rep.columns.push_back("rho_" + std::to_string(p));
    rep.curves.push_back(autocorrelation(ens, p, max_lag).values);
  }
  rep.json = {{"tau", rep.decorrelation.tau},
              {"per_tracer_tau", detail::numbers_json(rep.decorrelation.per_tracer)},
              {"alpha", alpha},
              {"max_lag", max_lag},
              {"input_provenance", std::string(to_string(tracers.provenance))}};
  return rep;
}

inline void write_autocorr_report(const std::string& dir, const AutocorrReport& rep) {
  write_json(join_path(dir, files::kAutocorr), rep.json);
  write_columns(join_path(dir, files::kAutocorrCurves), rep.columns, rep.curves);
}

// ---------------------------------------------------------------------------
// Full pipeline

struct PipelineOptions {
  bool lyapunov = true;
  bool write_files = true;
};

struct PipelineResult {
  SimulationOutput simulation;
  TrajectoryData observed;  // input to the estimators (smoothed or raw)
  CirculationReport circulations;
  ReconstructionReport reconstruction;
  EvaluationReport evaluation;
  std::optional<Json> lyapunov;
  Json metrics;
};

/// simulate -> corrupt -> smooth -> velocities -> circulations -> reconstruct
/// -> evaluate (-> lyapunov). Noise is skipped when sigma is 0 and smoothing
/// when disabled. The metrics document holds no timing information.
inline PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& dir,
                                   const PipelineOptions& opt = {}) {
  cfg.validate();
  const VortexSystem& guess = cfg.guess();
  PipelineResult res;
  res.simulation = simulate_stage(cfg);
  const bool noisy = cfg.noise.sigma > 0.0;
  TrajectoryData noisy_data = noisy ? corrupt_stage(res.simulation.tracers, cfg.noise.sigma, cfg.noise.seed)
                                    : res.simulation.tracers;
  res.observed = cfg.smoothing.enabled ? smooth_stage(noisy_data, cfg.smoothing.kernel_sigma) : noisy_data;
  const VelocityData vel = velocity_stage(res.observed);
  res.circulations = circulation_stage(res.observed, vel, guess, cfg.solver, &cfg.vortices.circulations);
  const VortexSystem estimate{res.circulations.estimate.circulations, res.circulations.estimate.initial_positions()};
  res.reconstruction = reconstruction_stage(res.observed, estimate, cfg.reconstruction, cfg.tau);
  res.evaluation = evaluation_stage(res.reconstruction.recovered, res.simulation.vortices);
  if (opt.lyapunov) res.lyapunov = lyapunov_stage(cfg.vortices, cfg.lyapunov);

  Json& m = res.metrics;
  m["circulations"] = res.circulations.json.at("truth");
  m["circulations"]["estimated"] = res.circulations.json.at("circulations");
  m["circulations"]["converged_snapshots"] = res.circulations.json.at("converged_snapshots");
  m["reconstruction"] = res.evaluation.json;
  m["reconstruction"]["tau"] = res.reconstruction.json.at("tau");
  m["reconstruction"]["intervals"] = res.reconstruction.json.at("intervals");
  m["reconstruction"]["converged_intervals"] = res.reconstruction.json.at("converged_intervals");
  if (res.lyapunov) {
    m["lyapunov"] = *res.lyapunov;
    m["lyapunov"]["inverse_tau"] = 1.0 / res.reconstruction.result.plan.tau;
  }
  m["seeds"] = {{"placement", cfg.tracers.seed}, {"noise", cfg.noise.seed}, {"solver", cfg.solver.seed}};

  if (opt.write_files) {
    write_json(join_path(dir, files::kConfig), config_to_json(cfg));
    write_trajectory(join_path(dir, files::kVortices), res.simulation.vortices);
    write_trajectory(join_path(dir, files::kTracersRaw), res.simulation.tracers);
    if (noisy) write_trajectory(join_path(dir, files::kTracersNoisy), noisy_data);
    if (cfg.smoothing.enabled) write_trajectory(join_path(dir, files::kTracersSmoothed), res.observed);
    write_velocity(join_path(dir, files::kVelocities), vel);
    write_circulation_report(dir, res.circulations);
    write_reconstruction_report(dir, res.reconstruction);
    write_columns(join_path(dir, files::kErrors), {"time", "error", "boundary"}, res.evaluation.columns);
    if (res.lyapunov) write_json(join_path(dir, files::kLyapunov), *res.lyapunov);
    write_json(join_path(dir, files::kMetrics), m);
  }
  return res;
}

}  // namespace vortrack
