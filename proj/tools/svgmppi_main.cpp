// Command-line entry point: scenario runs, solver benchmarks, the ablation
// grid, and a Gaussian-fit demonstration. All data products are written as
// CSV/JSON for external plotting; a machine-readable summary line prefixed
// "RESULT " is printed for scripting.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svgmppi/svgmppi.hpp"

namespace {

using namespace svgmppi;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::int64_t seed = -1;  // -1: keep the config file's seed
};

ScenarioConfig load_effective_config(const CommonArgs& args) {
  ScenarioConfig cfg = load_config(args.config_path);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  for (const auto& assignment : args.overrides) apply_override(cfg, assignment);
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs* args, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", args->config_path, "scenario config file");
  if (needs_config) opt->required();
  cmd->add_option("--seed", args->seed, "override the config seed");
  cmd->add_option("--set", args->overrides, "config override key=value (repeatable)");
  cmd->add_option("--out", args->out_dir, "output directory");
}

int cmd_run(const CommonArgs& args) {
  const ScenarioConfig cfg = load_effective_config(args);
  const ScenarioResult result = run_scenario(cfg);
  persist(result, cfg, args.out_dir);

  std::printf("scenario=%s solver=%s%s%s laps=%d\n", cfg.scenario.c_str(), cfg.solver.c_str(),
              cfg.solver == "svg_mppi" && !cfg.use_nominal ? " (ns off)" : "",
              cfg.solver == "svg_mppi" && !cfg.use_adaptive_cov ? " (ac off)" : "", cfg.laps);
  std::printf("%-6s %-12s %-12s\n", "lap", "MS", "collisions");
  for (std::size_t i = 0; i < result.laps.size(); ++i)
    std::printf("%-6zu %-12.6g %-12d\n", i, result.laps[i].ms, result.laps[i].collisions);
  std::printf("MS mean  : %.6g\n", result.ms_mean);
  std::printf("CR       : %.4g %% (%d / %d)\n", result.cr_percent, result.total_collisions,
              result.obstacle_encounters);
  std::printf("solve ms : mean %.3f max %.3f\n", result.solve_ms_mean, result.solve_ms_max);
  std::printf(
      "RESULT subcmd=run scenario=%s solver=%s seed=%llu laps=%d ms_mean=%.17g "
      "cr_percent=%.17g collisions=%d encounters=%d out=%s\n",
      cfg.scenario.c_str(), cfg.solver.c_str(),
      static_cast<unsigned long long>(cfg.seed), cfg.laps, result.ms_mean, result.cr_percent,
      result.total_collisions, result.obstacle_encounters, args.out_dir.c_str());
  return 0;
}

int cmd_bench(const CommonArgs& args, int n_solves) {
  if (n_solves < 1) throw ConfigError("bench: --n must be >= 1");
  ScenarioConfig cfg = load_effective_config(args);

  VehicleParams params = cfg.vehicle;
  params.dt = cfg.control_period;
  const GridMap track = load_grid(cfg.map_file);
  const WaypointPath path = load_waypoints(cfg.waypoints_file, true);
  const GridMap map = rasterize(track, {}, cfg.inflation);

  SolverConfig solver_cfg = cfg.solver_cfg;
  solver_cfg.m = 1;
  solver_cfg.seed = cfg.seed;
  const SolverKind kind = cfg.solver == "svg_mppi" ? SolverKind::kSvgMppi : SolverKind::kMppi;
  Controller controller(solver_cfg, kind, cfg.use_nominal, cfg.use_adaptive_cov);

  VehicleState state;
  state.x = path[0].x;
  state.y = path[0].y;
  state.yaw = path[0].yaw;
  state.v = path[0].speed;
  const auto profile = reference_speed_profile(path, 0.0, solver_cfg.T, params.dt);
  TrackingCostEvaluator evaluator(map, path, params, state, profile, 0, cfg.tracking_window);

  std::vector<double> times_ms(n_solves);
  long calls_per_solve = 0;
  for (int i = 0; i < n_solves; ++i) {
    const long before = evaluator.calls();
    const auto t0 = std::chrono::steady_clock::now();
    (void)controller.solve(evaluator);
    times_ms[i] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    calls_per_solve = evaluator.calls() - before;
  }
  std::vector<double> sorted = times_ms;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double mean =
      std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  const double max = sorted.back();

  std::printf("bench: %d solves, K=%d T=%d solver=%s\n", n_solves, solver_cfg.K, solver_cfg.T,
              cfg.solver.c_str());
  std::printf("solve ms : mean %.3f median %.3f max %.3f\n", mean, median, max);
  std::printf("evaluator calls per solve: %ld\n", calls_per_solve);
  std::printf(
      "RESULT subcmd=bench solver=%s K=%d n=%d mean_ms=%.6g median_ms=%.6g max_ms=%.6g "
      "calls_per_solve=%ld\n",
      cfg.solver.c_str(), solver_cfg.K, n_solves, mean, median, max, calls_per_solve);
  return 0;
}

int cmd_ablate(const CommonArgs& args) {
  const ScenarioConfig cfg = load_effective_config(args);
  const auto rows = ablate(cfg);

  std::printf("%-10s %-12s %-12s %-10s\n", "method", "PT MS", "OA MS", "OA CR %");
  for (const auto& row : rows)
    std::printf("%-10s %-12.6g %-12.6g %-10.4g\n", row.label.c_str(), row.pt_ms, row.oa_ms,
                row.oa_cr);

  std::filesystem::create_directories(args.out_dir);
  const std::string csv_path = args.out_dir + "/ablation.csv";
  std::FILE* csv = std::fopen(csv_path.c_str(), "w");
  if (csv == nullptr) throw IoError("cannot write " + csv_path);
  std::fprintf(csv, "method,pt_ms,oa_ms,oa_cr\n");
  for (const auto& row : rows)
    std::fprintf(csv, "%s,%.17g,%.17g,%.17g\n", row.label.c_str(), row.pt_ms, row.oa_ms,
                 row.oa_cr);
  std::fclose(csv);

  std::printf("RESULT subcmd=ablate seed=%llu laps=%d out=%s\n",
              static_cast<unsigned long long>(cfg.seed), cfg.laps, csv_path.c_str());
  return 0;
}

int cmd_fit_demo() {
  const auto make_traj = [](const std::vector<double>& a, const std::vector<double>& b) {
    TransportTrajectory traj;
    traj.qstar_values = Vec::Zero(a.size());
    traj.costs = Vec::Zero(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ControlSequence seq(1, 1);
      seq(0, 0) = a[i];
      traj.states.push_back(seq);
      traj.qstar_values(static_cast<int>(i)) = b[i];
    }
    return traj;
  };
  const CovarianceSchedule fallback = CovarianceSchedule::constant_sigma(1, 1, 0.075);
  const auto report = [&](const char* name, const TransportTrajectory& traj) {
    FitDiagnostics diag;
    const CovarianceSchedule cov = fit_covariance(traj, 1e-4, 10.0, fallback, &diag);
    const double sigma = std::sqrt(cov(0, 0));
    // Weighted RMS residual of the quadratic log-model.
    double num = 0.0, den = 0.0;
    if (diag.fallback_entries == 0) {
      for (int l = 0; l < traj.length(); ++l) {
        const double a = traj.states[l](0, 0);
        const double b = std::max(traj.qstar_values(l), kQstarFloor);
        const double pred = -a * a / (2.0 * sigma * sigma);
        const double centered_log =
            std::log(b) - (std::log(traj.qstar_values.maxCoeff()));
        num += b * b * (centered_log - pred) * (centered_log - pred);
        den += b * b;
      }
    }
    std::printf("%-22s sigma=%-12.8g fallbacks=%d rms_residual=%.3g\n", name, sigma,
                diag.fallback_entries, den > 0 ? std::sqrt(num / den) : 0.0);
  };

  // Exact quadratic log-density: recovers sigma = 0.5 exactly.
  std::vector<double> a1 = {-1.0, 0.0, 1.0};
  std::vector<double> b1;
  for (const double v : a1) b1.push_back(std::exp(-v * v / (2.0 * 0.25)));
  report("exact gaussian", make_traj(a1, b1));

  // Flat density: singular fit, falls back.
  report("flat density", make_traj(a1, {0.3, 0.3, 0.3}));

  // Noisy samples of a sigma = 0.3 Gaussian.
  const auto stream = rng::make_stream(7, rng::Purpose::kTest);
  std::vector<double> a3, b3;
  for (int i = 0; i < 20; ++i) {
    const double v = -0.45 + 0.9 * i / 19.0;
    const double noise = 1.0 + 0.05 * (2.0 * rng::uniform_pair(stream, i, 0)[0] - 1.0);
    a3.push_back(v);
    b3.push_back(std::exp(-v * v / (2.0 * 0.09)) * noise);
  }
  report("noisy gaussian (0.3)", make_traj(a3, b3));

  std::printf("RESULT subcmd=fit-demo cases=3\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "svgmppi: sampling-based stochastic optimal control (MPPI and "
      "Stein-variational-guided MPPI) with a 2D vehicle benchmark harness"};
  app.require_subcommand(1);
  app.footer("Environment:\n  OMP_NUM_THREADS  caps solver threads\n\nConfig keys:\n" +
             svgmppi::config_help());

  CommonArgs run_args, bench_args, ablate_args;
  int bench_n = 100;

  CLI::App* run = app.add_subcommand("run", "run one scenario and persist its artifacts");
  add_common(run, &run_args);
  CLI::App* bench =
      app.add_subcommand("bench", "time repeated solves on a fixed state");
  add_common(bench, &bench_args);
  bench->add_option("--n", bench_n, "number of timed solves (>= 1)");
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "run the NS/AC ablation grid on both scenarios");
  add_common(ablate_cmd, &ablate_args);
  CLI::App* fit_demo = app.add_subcommand("fit-demo", "Gaussian fit on synthetic data");
  CLI::App* version = app.add_subcommand("version", "print version and schema info");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (bench->parsed()) return cmd_bench(bench_args, bench_n);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_args);
    if (fit_demo->parsed()) return cmd_fit_demo();
    if (version->parsed()) {
      std::printf("svgmppi %s (config schema %d, grid schema %d)\n", svgmppi::kVersion,
                  svgmppi::kConfigSchema, svgmppi::kGridSchema);
      return 0;
    }
  } catch (const svgmppi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const svgmppi::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
