#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "svgmppi/core/types.hpp"
#include "svgmppi/sim/vehicle.hpp"
#include "svgmppi/version.hpp"

namespace svgmppi {

/// One closed-loop scenario run: which course, which solver, how long.
struct ScenarioConfig {
  std::string scenario = "pt";     // pt | oa
  int laps = 1;
  std::string solver = "svg_mppi"; // mppi | svg_mppi
  bool use_nominal = true;         // NS ablation flag (svg_mppi family)
  bool use_adaptive_cov = true;    // AC ablation flag
  std::uint64_t seed = 0;
  double control_period = 0.05;    // s; also the simulation step
  double solve_timeout_ms = 0.0;   // 0 disables the per-step timeout

  SolverConfig solver_cfg;
  VehicleParams vehicle;

  std::string map_file;
  std::string waypoints_file;
  double inflation = 0.15;  // m, vehicle half-width

  int obstacle_count = 5;
  double obstacle_radius = 0.12;        // m
  double obstacle_max_offset = 0.1;     // m
  double obstacle_min_separation = 1.5; // m along the path
  double spawn_clearance = 2.0;         // m of path around the vehicle kept obstacle-free
  std::string fixed_obstacles;          // "x,y,r;..." replaces random placement

  int tracking_window = 20;   // waypoints each side in nearest-reference search
  int max_steps_per_lap = 0;  // 0 = automatic cap

  void validate() const {
    if (scenario != "pt" && scenario != "oa")
      throw ConfigError("scenario must be 'pt' or 'oa'");
    if (solver != "mppi" && solver != "svg_mppi")
      throw ConfigError("solver must be 'mppi' or 'svg_mppi'");
    if (laps < 1) throw ConfigError("laps must be >= 1");
    if (!(control_period > 0.0)) throw ConfigError("control_period must be > 0");
    if (solve_timeout_ms < 0.0) throw ConfigError("solve_timeout_ms must be >= 0");
    if (map_file.empty()) throw ConfigError("map.file is required");
    if (waypoints_file.empty()) throw ConfigError("waypoints.file is required");
    if (inflation < 0.0) throw ConfigError("map.inflation must be >= 0");
    if (obstacle_count < 1) throw ConfigError("oa.obstacle_count must be >= 1");
    if (!(obstacle_radius > 0.0)) throw ConfigError("oa.obstacle_radius must be > 0");
    if (obstacle_max_offset < 0.0) throw ConfigError("oa.max_offset must be >= 0");
    if (obstacle_min_separation < 0.0) throw ConfigError("oa.min_separation must be >= 0");
    if (spawn_clearance < 0.0) throw ConfigError("oa.spawn_clearance must be >= 0");
    if (tracking_window < 1) throw ConfigError("sim.tracking_window must be >= 1");
    if (max_steps_per_lap < 0) throw ConfigError("sim.max_steps_per_lap must be >= 0");
    solver_cfg.validate();
    vehicle.validate();
  }
};

namespace config_detail {

inline int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
  }
}

inline double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + value + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

inline std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + value + "'");
  }
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace config_detail

/// Schema entry for one config key: parse, echo, and documentation.
struct ConfigKey {
  std::string name;
  std::string unit;  // "-" when dimensionless
  std::string help;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

inline const std::vector<ConfigKey>& config_schema() {
  using S = ScenarioConfig;
  namespace d = config_detail;
  static const std::vector<ConfigKey> keys = {
      {"schema_version", "-", "config file schema version; must be 1",
       [](S&, const std::string& v) {
         if (d::to_int("schema_version", v) != kConfigSchema)
           throw ConfigError("unsupported schema_version: " + v);
       },
       [](const S&) { return std::to_string(kConfigSchema); }},
      {"scenario", "-", "scenario kind: pt (path tracking) or oa (obstacle avoidance)",
       [](S& c, const std::string& v) { c.scenario = v; },
       [](const S& c) { return c.scenario; }},
      {"laps", "-", "number of laps to run (>= 1)",
       [](S& c, const std::string& v) { c.laps = d::to_int("laps", v); },
       [](const S& c) { return std::to_string(c.laps); }},
      {"solver", "-", "solver family: mppi or svg_mppi",
       [](S& c, const std::string& v) { c.solver = v; },
       [](const S& c) { return c.solver; }},
      {"use_nominal", "-", "svg_mppi: anchor weights to the picked nominal sequence (NS)",
       [](S& c, const std::string& v) { c.use_nominal = d::to_bool("use_nominal", v); },
       [](const S& c) { return c.use_nominal ? "true" : "false"; }},
      {"use_adaptive_cov", "-", "svg_mppi: sample with the fitted covariance schedule (AC)",
       [](S& c, const std::string& v) { c.use_adaptive_cov = d::to_bool("use_adaptive_cov", v); },
       [](const S& c) { return c.use_adaptive_cov ? "true" : "false"; }},
      {"seed", "-", "64-bit seed; fixes every random draw of the run",
       [](S& c, const std::string& v) { c.seed = d::to_u64("seed", v); },
       [](const S& c) { return std::to_string(c.seed); }},
      {"control_period", "s", "control period and simulation step",
       [](S& c, const std::string& v) { c.control_period = d::to_double("control_period", v); },
       [](const S& c) { return d::fmt(c.control_period); }},
      {"solve_timeout_ms", "ms", "per-step solve budget; 0 disables; on timeout the previous input is reapplied",
       [](S& c, const std::string& v) { c.solve_timeout_ms = d::to_double("solve_timeout_ms", v); },
       [](const S& c) { return d::fmt(c.solve_timeout_ms); }},

      {"solver.K", "-", "number of sampled input sequences per solve",
       [](S& c, const std::string& v) { c.solver_cfg.K = d::to_int("solver.K", v); },
       [](const S& c) { return std::to_string(c.solver_cfg.K); }},
      {"solver.T", "-", "prediction horizon length in steps",
       [](S& c, const std::string& v) { c.solver_cfg.T = d::to_int("solver.T", v); },
       [](const S& c) { return std::to_string(c.solver_cfg.T); }},
      {"solver.lambda", "-", "softmax temperature (> 0)",
       [](S& c, const std::string& v) { c.solver_cfg.lambda = d::to_double("solver.lambda", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.lambda); }},
      {"solver.u_min", "rad", "lower steering bound",
       [](S& c, const std::string& v) { c.solver_cfg.u_bounds.lo = d::to_double("solver.u_min", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.u_bounds.lo); }},
      {"solver.u_max", "rad", "upper steering bound",
       [](S& c, const std::string& v) { c.solver_cfg.u_bounds.hi = d::to_double("solver.u_max", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.u_bounds.hi); }},
      {"solver.sigma", "rad", "baseline sampling standard deviation",
       [](S& c, const std::string& v) { c.solver_cfg.sigma = d::to_double("solver.sigma", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.sigma); }},
      {"solver.guide_particles", "-", "guide particle count K_g",
       [](S& c, const std::string& v) { c.solver_cfg.guide_particles = d::to_int("solver.guide_particles", v); },
       [](const S& c) { return std::to_string(c.solver_cfg.guide_particles); }},
      {"solver.guide_iterations", "-", "transport iterations L per solve",
       [](S& c, const std::string& v) { c.solver_cfg.guide_iterations = d::to_int("solver.guide_iterations", v); },
       [](const S& c) { return std::to_string(c.solver_cfg.guide_iterations); }},
      {"solver.guide_samples", "-", "Monte Carlo evaluations N per transport iteration",
       [](S& c, const std::string& v) { c.solver_cfg.guide_samples = d::to_int("solver.guide_samples", v); },
       [](const S& c) { return std::to_string(c.solver_cfg.guide_samples); }},
      {"solver.guide_epsilon", "-", "transport gradient-descent step size",
       [](S& c, const std::string& v) { c.solver_cfg.guide_epsilon = d::to_double("solver.guide_epsilon", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.guide_epsilon); }},
      {"solver.guide_sigma", "rad", "guide perturbation standard deviation",
       [](S& c, const std::string& v) { c.solver_cfg.guide_sigma = d::to_double("solver.guide_sigma", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.guide_sigma); }},
      {"solver.guide_lambda", "-", "temperature of the transport weights and fitted density",
       [](S& c, const std::string& v) { c.solver_cfg.guide_lambda = d::to_double("solver.guide_lambda", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.guide_lambda); }},
      {"solver.sigma_min", "rad", "adaptive covariance clamp, lower",
       [](S& c, const std::string& v) { c.solver_cfg.sigma_min = d::to_double("solver.sigma_min", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.sigma_min); }},
      {"solver.sigma_max", "rad", "adaptive covariance clamp, upper",
       [](S& c, const std::string& v) { c.solver_cfg.sigma_max = d::to_double("solver.sigma_max", v); },
       [](const S& c) { return d::fmt(c.solver_cfg.sigma_max); }},

      {"vehicle.wheelbase", "m", "bicycle model wheelbase",
       [](S& c, const std::string& v) { c.vehicle.wheelbase = d::to_double("vehicle.wheelbase", v); },
       [](const S& c) { return d::fmt(c.vehicle.wheelbase); }},
      {"vehicle.steer_limit", "rad", "steering actuator limit",
       [](S& c, const std::string& v) { c.vehicle.steer_limit = d::to_double("vehicle.steer_limit", v); },
       [](const S& c) { return d::fmt(c.vehicle.steer_limit); }},
      {"vehicle.steer_time_constant", "s", "first-order steering lag; 0 = exact hold",
       [](S& c, const std::string& v) { c.vehicle.steer_time_constant = d::to_double("vehicle.steer_time_constant", v); },
       [](const S& c) { return d::fmt(c.vehicle.steer_time_constant); }},
      {"vehicle.dead_time_steps", "-", "steering dead time in control periods",
       [](S& c, const std::string& v) { c.vehicle.dead_time_steps = d::to_int("vehicle.dead_time_steps", v); },
       [](const S& c) { return std::to_string(c.vehicle.dead_time_steps); }},

      {"map.file", "-", "track occupancy grid (gridv1 text format)",
       [](S& c, const std::string& v) { c.map_file = v; },
       [](const S& c) { return c.map_file; }},
      {"map.inflation", "m", "occupancy dilation radius (vehicle half-width)",
       [](S& c, const std::string& v) { c.inflation = d::to_double("map.inflation", v); },
       [](const S& c) { return d::fmt(c.inflation); }},
      {"waypoints.file", "-", "reference waypoint CSV (x,y,yaw,speed)",
       [](S& c, const std::string& v) { c.waypoints_file = v; },
       [](const S& c) { return c.waypoints_file; }},

      {"oa.obstacle_count", "-", "obstacles placed per lap in scenario oa",
       [](S& c, const std::string& v) { c.obstacle_count = d::to_int("oa.obstacle_count", v); },
       [](const S& c) { return std::to_string(c.obstacle_count); }},
      {"oa.obstacle_radius", "m", "obstacle disk radius",
       [](S& c, const std::string& v) { c.obstacle_radius = d::to_double("oa.obstacle_radius", v); },
       [](const S& c) { return d::fmt(c.obstacle_radius); }},
      {"oa.max_offset", "m", "obstacle center offset radius around its waypoint",
       [](S& c, const std::string& v) { c.obstacle_max_offset = d::to_double("oa.max_offset", v); },
       [](const S& c) { return d::fmt(c.obstacle_max_offset); }},
      {"oa.min_separation", "m", "minimum along-path separation between obstacles",
       [](S& c, const std::string& v) { c.obstacle_min_separation = d::to_double("oa.min_separation", v); },
       [](const S& c) { return d::fmt(c.obstacle_min_separation); }},
      {"oa.spawn_clearance", "m", "path window around the vehicle kept free when placing obstacles",
       [](S& c, const std::string& v) { c.spawn_clearance = d::to_double("oa.spawn_clearance", v); },
       [](const S& c) { return d::fmt(c.spawn_clearance); }},
      {"oa.fixed_obstacles", "-", "semicolon list 'x,y,r;...' overriding random placement",
       [](S& c, const std::string& v) { c.fixed_obstacles = v; },
       [](const S& c) { return c.fixed_obstacles; }},

      {"sim.tracking_window", "-", "nearest-reference search half-window in waypoints",
       [](S& c, const std::string& v) { c.tracking_window = d::to_int("sim.tracking_window", v); },
       [](const S& c) { return std::to_string(c.tracking_window); }},
      {"sim.max_steps_per_lap", "-", "hard per-lap step cap; 0 picks one from the track length",
       [](S& c, const std::string& v) { c.max_steps_per_lap = d::to_int("sim.max_steps_per_lap", v); },
       [](const S& c) { return std::to_string(c.max_steps_per_lap); }},
  };
  return keys;
}

inline const ConfigKey* find_config_key(const std::string& name) {
  for (const auto& key : config_schema())
    if (key.name == name) return &key;
  return nullptr;
}

inline void set_config_value(ScenarioConfig& cfg, const std::string& name,
                             const std::string& value) {
  const ConfigKey* key = find_config_key(name);
  if (key == nullptr) throw ConfigError("unknown config key: '" + name + "'");
  key->set(cfg, value);
}

/// Applies one `key=value` override (the CLI --set form).
inline void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value: '" + assignment + "'");
  set_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace config_detail

/// Parses a `key = value` config file. Requires schema_version; rejects
/// unknown keys by name. Relative file paths resolve against the config
/// file's directory.
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  ScenarioConfig cfg;
  bool saw_version = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = config_detail::trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string name = config_detail::trim(text.substr(0, eq));
    const std::string value = config_detail::trim(text.substr(eq + 1));
    if (name == "schema_version") saw_version = true;
    set_config_value(cfg, name, value);
  }
  if (!saw_version) throw ConfigError(path + ": missing schema_version");

  const auto dir = std::filesystem::path(path).parent_path();
  const auto resolve = [&](std::string& file) {
    if (!file.empty() && std::filesystem::path(file).is_relative())
      file = (dir / file).string();
  };
  resolve(cfg.map_file);
  resolve(cfg.waypoints_file);
  return cfg;
}

/// Effective configuration as (key, value) pairs for the run manifest.
inline std::vector<std::pair<std::string, std::string>> config_items(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& key : config_schema()) items.emplace_back(key.name, key.get(cfg));
  return items;
}

/// One line per key, with units, for --help.
inline std::string config_help() {
  std::ostringstream os;
  for (const auto& key : config_schema()) {
    os << "  " << key.name;
    if (key.unit != "-") os << " [" << key.unit << "]";
    os << "  " << key.help << "\n";
  }
  return os.str();
}

}  // namespace svgmppi
