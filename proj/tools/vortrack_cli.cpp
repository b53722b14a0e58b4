// Command-line front end: one subcommand per pipeline stage.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "vortrack/vortrack.hpp"

namespace {

using namespace vortrack;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string truth;
};

void add_common(CLI::App* cmd, Common& c, const char* seed_help = nullptr, bool truth = false) {
  cmd->add_option("--config", c.config, "experiment config (JSON)");
  cmd->add_option("--out", c.out, "output directory (default: config output.directory, else ./out)");
  if (seed_help) cmd->add_option("--seed", c.seed, seed_help);
  if (truth) cmd->add_option("--truth", c.truth, "ground-truth vortex trajectory file; enables error reporting");
}

std::optional<ExperimentConfig> load_config(const Common& c) {
  if (c.config.empty()) return std::nullopt;
  return read_config(c.config);
}

ExperimentConfig need_config(const Common& c, const char* cmd) {
  if (c.config.empty()) fail(ErrorCode::InvalidArgument, std::string(cmd) + " requires --config");
  return read_config(c.config);
}

std::string out_dir(const Common& c, const std::optional<ExperimentConfig>& cfg) {
  if (!c.out.empty()) return c.out;
  return cfg ? cfg->output_directory : std::string("out");
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

int error_exit(const Error& e) {
  Json j{{"error", std::string(e.category())}, {"message", e.message()}};
  if (e.time) j["time"] = *e.time;
  std::cerr << j.dump() << "\n";
  return 10 + static_cast<int>(e.code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-vortex circulation and trajectory recovery from passive tracers"};
  app.require_subcommand(1);

  Common c;
  std::string input, input2, circulations_path;
  std::optional<double> sigma, kernel_sigma, tau, alpha, horizon;
  std::optional<std::size_t> nt, max_lag;
  bool no_lyapunov = false;

  auto* sim = app.add_subcommand("simulate", "integrate vortices and tracers; writes vortices.csv and tracers_raw.csv");
  add_common(sim, c, "tracer placement seed");
  sim->add_option("--nt", nt, "override the number of samples");

  auto* cor = app.add_subcommand("corrupt", "add Gaussian noise to raw tracer tracks");
  add_common(cor, c, "noise seed");
  cor->add_option("input", input, "raw tracer trajectory file")->required();
  cor->add_option("--sigma", sigma, "noise standard deviation");

  auto* smo = app.add_subcommand("smooth", "Gaussian-smooth tracer tracks");
  add_common(smo, c);
  smo->add_option("input", input, "tracer trajectory file")->required();
  smo->add_option("--kernel-sigma", kernel_sigma, "kernel standard deviation in samples");

  auto* vel = app.add_subcommand("velocities", "fourth-order finite-difference tracer velocities");
  add_common(vel, c);
  vel->add_option("input", input, "tracer trajectory file")->required();

  auto* circ = app.add_subcommand("circulations", "estimate circulations from tracers and velocities");
  add_common(circ, c, "guess perturbation seed", true);
  circ->add_option("tracers", input, "tracer trajectory file")->required();
  circ->add_option("velocities", input2, "velocity file")->required();

  auto* rec = app.add_subcommand("reconstruct", "recover vortex trajectories from tracers and circulations");
  add_common(rec, c, nullptr, true);
  rec->add_option("tracers", input, "tracer trajectory file")->required();
  rec->add_option("--circulations", circulations_path, "circulation report (circulations.json)")->required();
  rec->add_option("--tau", tau, "fixed partition length instead of the decorrelation time");

  auto* eva = app.add_subcommand("evaluate", "per-step and total relative error of recovered vortex tracks");
  add_common(eva, c, nullptr, true);
  eva->add_option("recovered", input, "recovered vortex trajectory file")->required();

  auto* lya = app.add_subcommand("lyapunov", "largest Lyapunov exponent of the vortex system");
  add_common(lya, c);
  lya->add_option("--horizon", horizon, "integration horizon");

  auto* acf = app.add_subcommand("autocorr", "tracer autocorrelations and decorrelation time");
  add_common(acf, c);
  acf->add_option("input", input, "tracer trajectory file")->required();
  acf->add_option("--alpha", alpha, "decorrelation threshold");
  acf->add_option("--max-lag", max_lag, "largest lag in samples");

  auto* pip = app.add_subcommand("pipeline", "run every stage and write metrics.json");
  add_common(pip, c, "tracer placement seed");
  pip->add_option("--nt", nt, "override the number of samples");
  pip->add_flag("--no-lyapunov", no_lyapunov, "skip the Lyapunov estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    if (sim->parsed() || pip->parsed()) {
      ExperimentConfig cfg = need_config(c, sim->parsed() ? "simulate" : "pipeline");
      if (c.seed) cfg.tracers.seed = *c.seed;
      if (nt) cfg.grid.nt = *nt;
      const std::string dir = out_dir(c, cfg);
      if (sim->parsed()) {
        const SimulationOutput s = simulate_stage(cfg);
        write_trajectory(join_path(dir, files::kVortices), s.vortices);
        write_trajectory(join_path(dir, files::kTracersRaw), s.tracers);
        print_json({{"vortices", join_path(dir, files::kVortices)}, {"tracers", join_path(dir, files::kTracersRaw)},
                    {"max_error_estimate", s.record.max_error_estimate}});
      } else {
        PipelineOptions opt;
        opt.lyapunov = !no_lyapunov;
        print_json(run_pipeline(cfg, dir, opt).metrics);
      }
    } else if (cor->parsed()) {
      const auto cfg = load_config(c);
      const double s = sigma ? *sigma : cfg ? cfg->noise.sigma : NoiseConfig{}.sigma;
      const std::uint64_t seed = c.seed ? *c.seed : cfg ? cfg->noise.seed : NoiseConfig{}.seed;
      write_trajectory(join_path(out_dir(c, cfg), files::kTracersNoisy), corrupt_stage(read_trajectory(input), s, seed));
    } else if (smo->parsed()) {
      const auto cfg = load_config(c);
      const double ks = kernel_sigma ? *kernel_sigma : cfg ? cfg->smoothing.kernel_sigma : SmoothingConfig{}.kernel_sigma;
      write_trajectory(join_path(out_dir(c, cfg), files::kTracersSmoothed), smooth_stage(read_trajectory(input), ks));
    } else if (vel->parsed()) {
      const auto cfg = load_config(c);
      write_velocity(join_path(out_dir(c, cfg), files::kVelocities), velocity_stage(read_trajectory(input)));
    } else if (circ->parsed()) {
      ExperimentConfig cfg = need_config(c, "circulations");
      if (c.seed) cfg.solver.seed = *c.seed;
      std::optional<std::vector<double>> truth;
      if (!c.truth.empty()) truth = read_trajectory(c.truth).circulations;
      const auto rep = circulation_stage(read_trajectory(input), read_velocity(input2), cfg.guess(), cfg.solver,
                                         truth ? &*truth : nullptr);
      write_circulation_report(out_dir(c, cfg), rep);
      print_json(rep.json);
    } else if (rec->parsed()) {
      const auto cfg = load_config(c);
      const ReconstructionConfig rc = cfg ? cfg->reconstruction : ReconstructionConfig{};
      std::optional<double> t = tau;
      if (!t && cfg) t = cfg->tau;
      const auto rep = reconstruction_stage(read_trajectory(input), read_circulation_report(circulations_path), rc, t);
      const std::string dir = out_dir(c, cfg);
      write_reconstruction_report(dir, rep);
      Json summary = {{"tau", rep.json.at("tau")}, {"intervals", rep.json.at("intervals")}};
      if (!c.truth.empty()) {
        const auto ev = evaluation_stage(rep.recovered, read_trajectory(c.truth));
        write_evaluation_report(dir, ev);
        summary["evaluation"] = ev.json;
      }
      print_json(summary);
    } else if (eva->parsed()) {
      const auto cfg = load_config(c);
      if (c.truth.empty()) fail(ErrorCode::InvalidArgument, "evaluate requires --truth");
      const auto ev = evaluation_stage(read_trajectory(input), read_trajectory(c.truth));
      write_evaluation_report(out_dir(c, cfg), ev);
      print_json(ev.json);
    } else if (lya->parsed()) {
      ExperimentConfig cfg = need_config(c, "lyapunov");
      if (horizon) cfg.lyapunov.horizon = *horizon;
      const Json j = lyapunov_stage(cfg.vortices, cfg.lyapunov);
      write_json(join_path(out_dir(c, cfg), files::kLyapunov), j);
      print_json(j);
    } else if (acf->parsed()) {
      const auto cfg = load_config(c);
      const ReconstructionConfig rc = cfg ? cfg->reconstruction : ReconstructionConfig{};
      const auto rep = autocorr_stage(read_trajectory(input), alpha ? *alpha : rc.alpha, max_lag ? *max_lag : rc.max_lag);
      write_autocorr_report(out_dir(c, cfg), rep);
      print_json(rep.json);
    }
  } catch (const Error& e) {
    return error_exit(e);
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
