#pragma once

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "svgmppi/control/controller.hpp"
#include "svgmppi/harness/config.hpp"
#include "svgmppi/sim/tracking_cost.hpp"

namespace svgmppi {

struct StepRecord {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double steer_cmd = 0.0;
  double cost = 0.0;  // S of the applied solution from the pre-step state
  int lap = 0;

  bool operator==(const StepRecord&) const = default;
};

struct LapStats {
  double ms = 0.0;  // mean sequence state cost of applied solutions
  int collisions = 0;
  int steps = 0;

  bool operator==(const LapStats&) const = default;
};

struct ScenarioResult {
  std::vector<LapStats> laps;
  std::vector<StepRecord> step_log;
  int total_collisions = 0;
  int obstacle_encounters = 0;
  double cr_percent = 0.0;  // collisions per obstacle encountered, percent
  double ms_mean = 0.0;     // mean of per-lap MS values
  long evaluator_calls = 0; // solver-side calls only
  int weight_underflow_steps = 0;
  int nonfinite_costs = 0;
  int timeouts = 0;
  int aborted_laps = 0;

  // Wall-clock statistics; persisted in the manifest only so that metric and
  // trajectory files stay byte-deterministic.
  double solve_ms_mean = 0.0;
  double solve_ms_max = 0.0;

  bool deterministic_equal(const ScenarioResult& o) const {
    return laps == o.laps && step_log == o.step_log &&
           total_collisions == o.total_collisions &&
           obstacle_encounters == o.obstacle_encounters && cr_percent == o.cr_percent &&
           ms_mean == o.ms_mean && evaluator_calls == o.evaluator_calls &&
           weight_underflow_steps == o.weight_underflow_steps &&
           nonfinite_costs == o.nonfinite_costs && timeouts == o.timeouts &&
           aborted_laps == o.aborted_laps;
  }
};

inline std::vector<ObstacleSpec> parse_fixed_obstacles(const std::string& text) {
  std::vector<ObstacleSpec> obstacles;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.empty()) continue;
    ObstacleSpec spec;
    char c1, c2;
    std::istringstream row(item);
    if (!(row >> spec.x >> c1 >> spec.y >> c2 >> spec.radius) || c1 != ',' || c2 != ',')
      throw ConfigError("oa.fixed_obstacles: bad entry '" + item + "'");
    obstacles.push_back(spec);
  }
  if (obstacles.empty()) throw ConfigError("oa.fixed_obstacles: no entries parsed");
  return obstacles;
}

/// Closed-loop scenario execution: observe -> solve -> apply the first
/// input -> advance the simulation, at the control period. In scenario oa,
/// obstacles are re-placed each lap. A collision is edge-triggered, counted
/// against the lap, and handled by resetting the vehicle to the nearest
/// collision-free upcoming waypoint and clearing solver warm-start state.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  VehicleParams params = cfg.vehicle;
  params.dt = cfg.control_period;

  const GridMap track = load_grid(cfg.map_file);
  const WaypointPath path = load_waypoints(cfg.waypoints_file, /*closed=*/true);
  const GridMap base_map = rasterize(track, {}, cfg.inflation);

  SolverConfig solver_cfg = cfg.solver_cfg;
  solver_cfg.m = 1;
  solver_cfg.seed = cfg.seed;
  const SolverKind kind =
      cfg.solver == "svg_mppi" ? SolverKind::kSvgMppi : SolverKind::kMppi;
  Controller controller(solver_cfg, kind, cfg.use_nominal, cfg.use_adaptive_cov);

  double min_speed = path[0].speed;
  for (const auto& wp : path.points()) min_speed = std::min(min_speed, wp.speed);
  const int auto_cap = static_cast<int>(
      5.0 * path.total_length() / (std::max(min_speed, 0.1) * params.dt));
  const int step_cap = cfg.max_steps_per_lap > 0 ? cfg.max_steps_per_lap : auto_cap;

  ScenarioResult result;
  VehicleState state;
  state.x = path[0].x;
  state.y = path[0].y;
  state.yaw = path[0].yaw;
  state.v = path[0].speed;

  int hint = 0;
  double sim_time = 0.0;
  double solve_ms_sum = 0.0;
  long solve_count = 0;
  double last_steer = 0.0;

  for (int lap = 0; lap < cfg.laps; ++lap) {
    GridMap lap_map = base_map;
    if (cfg.scenario == "oa") {
      std::vector<ObstacleSpec> obstacles;
      if (!cfg.fixed_obstacles.empty()) {
        obstacles = parse_fixed_obstacles(cfg.fixed_obstacles);
      } else {
        const auto stream = rng::make_stream(cfg.seed, rng::Purpose::kObstacles,
                                             static_cast<std::uint64_t>(lap));
        const PlacementExclusion spawn_zone{path.arc_at(hint), cfg.spawn_clearance};
        obstacles = place_obstacles(path, cfg.obstacle_count, cfg.obstacle_max_offset,
                                    cfg.obstacle_radius, cfg.obstacle_min_separation, stream,
                                    nullptr, spawn_zone);
      }
      lap_map = rasterize(track, obstacles, cfg.inflation);
      result.obstacle_encounters += static_cast<int>(obstacles.size());
    }

    LapStats lap_stats;
    double cost_sum = 0.0;
    double progress = 0.0;
    double arc_prev = path.arc_at(hint);
    bool was_colliding = false;

    while (progress < path.total_length()) {
      if (lap_stats.steps >= step_cap) {
        ++result.aborted_laps;
        break;
      }

      const NearestRef ref =
          nearest_reference(path, state.x, state.y, state.yaw, hint, cfg.tracking_window);
      hint = ref.index;
      const double arc = path.arc_at(hint);
      const auto profile =
          reference_speed_profile(path, arc, solver_cfg.T, params.dt);
      TrackingCostEvaluator evaluator(lap_map, path, params, state, profile, hint,
                                      cfg.tracking_window);

      const auto t0 = std::chrono::steady_clock::now();
      Controller::Output out = controller.solve(evaluator);
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      solve_ms_sum += ms;
      result.solve_ms_max = std::max(result.solve_ms_max, ms);
      ++solve_count;
      result.evaluator_calls += out.diag.evaluator_calls + out.guide_diag.evaluator_calls;
      result.weight_underflow_steps += out.diag.weight_underflow ? 1 : 0;
      result.nonfinite_costs += out.diag.nonfinite_costs;

      double steer_cmd;
      if (cfg.solve_timeout_ms > 0.0 && ms > cfg.solve_timeout_ms) {
        ++result.timeouts;
        steer_cmd = last_steer;
      } else {
        steer_cmd = out.solution(0, 0);
      }
      last_steer = steer_cmd;

      const double applied_cost = evaluator(out.solution.view());
      result.step_log.push_back(
          {sim_time, state.x, state.y, state.yaw, steer_cmd, applied_cost, lap});
      cost_sum += applied_cost;
      ++lap_stats.steps;

      state = step(state, steer_cmd, path.speed_at_arc(arc), params);
      sim_time += params.dt;

      const NearestRef after =
          nearest_reference(path, state.x, state.y, state.yaw, hint, cfg.tracking_window);
      hint = after.index;
      double delta = path.arc_at(hint) - arc_prev;
      if (delta > path.total_length() / 2) delta -= path.total_length();
      if (delta < -path.total_length() / 2) delta += path.total_length();
      progress += delta;
      arc_prev = path.arc_at(hint);

      const bool colliding = collision_indicator(lap_map, state.x, state.y) == 1;
      if (colliding && !was_colliding) {
        ++lap_stats.collisions;
        ++result.total_collisions;
        // Reset to the nearest upcoming collision-free waypoint.
        int target = hint;
        for (int ahead = 1; ahead <= path.size(); ++ahead) {
          const int candidate = path.wrap_index(hint + ahead);
          const Waypoint& wp = path[candidate];
          if (collision_indicator(lap_map, wp.x, wp.y) == 0) {
            target = candidate;
            break;
          }
        }
        const Waypoint& wp = path[target];
        state = VehicleState{};
        state.x = wp.x;
        state.y = wp.y;
        state.yaw = wp.yaw;
        state.v = wp.speed;
        controller.reset();
        last_steer = 0.0;
        double jump = path.arc_at(target) - arc_prev;
        if (jump < 0.0) jump += path.total_length();
        progress += jump;
        arc_prev = path.arc_at(target);
        hint = target;
        was_colliding = false;
      } else {
        was_colliding = colliding;
      }
    }

    lap_stats.ms = lap_stats.steps > 0 ? cost_sum / lap_stats.steps : 0.0;
    result.laps.push_back(lap_stats);
  }

  double ms_sum = 0.0;
  for (const auto& lap : result.laps) ms_sum += lap.ms;
  result.ms_mean = result.laps.empty() ? 0.0 : ms_sum / result.laps.size();
  result.cr_percent = result.obstacle_encounters > 0
                          ? 100.0 * result.total_collisions / result.obstacle_encounters
                          : 0.0;
  result.solve_ms_mean = solve_count > 0 ? solve_ms_sum / solve_count : 0.0;
  return result;
}

/// One ablation table row.
struct AblationRow {
  std::string label;
  std::string solver;
  bool use_nominal = false;
  bool use_adaptive_cov = false;
  double pt_ms = 0.0;
  double oa_ms = 0.0;
  double oa_cr = 0.0;
};

/// Runs {MPPI, MPPI+NS, MPPI+AC, MPPI+NS+AC} on both scenarios with the
/// base config's seed shared across variants.
inline std::vector<AblationRow> ablate(const ScenarioConfig& base) {
  std::vector<AblationRow> rows = {
      {"mppi", "mppi", false, false, 0, 0, 0},
      {"mppi+ns", "svg_mppi", true, false, 0, 0, 0},
      {"mppi+ac", "svg_mppi", false, true, 0, 0, 0},
      {"svg_mppi", "svg_mppi", true, true, 0, 0, 0},
  };
  for (auto& row : rows) {
    ScenarioConfig cfg = base;
    cfg.solver = row.solver;
    cfg.use_nominal = row.use_nominal;
    cfg.use_adaptive_cov = row.use_adaptive_cov;
    cfg.scenario = "pt";
    row.pt_ms = run_scenario(cfg).ms_mean;
    cfg.scenario = "oa";
    const ScenarioResult oa = run_scenario(cfg);
    row.oa_ms = oa.ms_mean;
    row.oa_cr = oa.cr_percent;
  }
  return rows;
}

}  // namespace svgmppi
