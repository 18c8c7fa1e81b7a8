#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "svgmppi/harness/config.hpp"
#include "svgmppi/harness/scenario.hpp"
#include "svgmppi/version.hpp"

namespace svgmppi {

/// Persisted layout under one output directory:
///   manifest.json   config echo, versions, wall-clock timing
///   metrics.json    per-lap and aggregate metrics (byte-deterministic)
///   trajectory.csv  per-step applied control log (byte-deterministic)
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kTrajectoryFile = "trajectory.csv";

namespace persist_detail {

inline std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace persist_detail

inline void persist(const ScenarioResult& result, const ScenarioConfig& cfg,
                    const std::string& out_dir) {
  if (result.laps.empty() || result.step_log.empty())
    throw ConfigError("persist: refusing to write an empty result");
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);

  {
    nlohmann::ordered_json manifest;
    manifest["schema_version"] = kManifestSchema;
    manifest["tool"] = "svgmppi";
    manifest["version"] = kVersion;
    manifest["formats"] = {{"config", kConfigSchema},
                           {"grid", kGridSchema},
                           {"metrics", kMetricsSchema},
                           {"trajectory_csv", kTrajectoryCsvSchema}};
    nlohmann::ordered_json config;
    for (const auto& [key, value] : config_items(cfg)) config[key] = value;
    manifest["config"] = std::move(config);
    manifest["timing"] = {{"solve_ms_mean", result.solve_ms_mean},
                          {"solve_ms_max", result.solve_ms_max}};
    std::ofstream out(dir / kManifestFile);
    if (!out) throw IoError("cannot write " + (dir / kManifestFile).string());
    out << manifest.dump(2) << '\n';
  }

  {
    nlohmann::ordered_json metrics;
    metrics["schema_version"] = kMetricsSchema;
    nlohmann::ordered_json laps = nlohmann::ordered_json::array();
    for (const auto& lap : result.laps)
      laps.push_back({{"ms", lap.ms}, {"collisions", lap.collisions}, {"steps", lap.steps}});
    metrics["laps"] = std::move(laps);
    metrics["ms_mean"] = result.ms_mean;
    metrics["cr_percent"] = result.cr_percent;
    metrics["total_collisions"] = result.total_collisions;
    metrics["obstacle_encounters"] = result.obstacle_encounters;
    metrics["evaluator_calls"] = result.evaluator_calls;
    metrics["weight_underflow_steps"] = result.weight_underflow_steps;
    metrics["nonfinite_costs"] = result.nonfinite_costs;
    metrics["timeouts"] = result.timeouts;
    metrics["aborted_laps"] = result.aborted_laps;
    std::ofstream out(dir / kMetricsFile);
    if (!out) throw IoError("cannot write " + (dir / kMetricsFile).string());
    out << metrics.dump(2) << '\n';
  }

  {
    std::ofstream out(dir / kTrajectoryFile);
    if (!out) throw IoError("cannot write " + (dir / kTrajectoryFile).string());
    out << "t,x,y,yaw,steer_cmd,S\n";
    using persist_detail::csv_double;
    for (const auto& row : result.step_log) {
      out << csv_double(row.t) << ',' << csv_double(row.x) << ',' << csv_double(row.y) << ','
          << csv_double(row.yaw) << ',' << csv_double(row.steer_cmd) << ','
          << csv_double(row.cost) << '\n';
    }
  }
}

/// Reloads a persisted run. Lap membership of each step is reconstructed
/// from the per-lap step counts.
inline ScenarioResult load_result(const std::string& out_dir) {
  const auto dir = std::filesystem::path(out_dir);
  ScenarioResult result;

  {
    std::ifstream in(dir / kMetricsFile);
    if (!in) throw IoError("cannot open " + (dir / kMetricsFile).string());
    nlohmann::json metrics = nlohmann::json::parse(in);
    if (metrics.at("schema_version").get<int>() != kMetricsSchema)
      throw IoError("unsupported metrics schema in " + out_dir);
    for (const auto& lap : metrics.at("laps"))
      result.laps.push_back({lap.at("ms").get<double>(), lap.at("collisions").get<int>(),
                             lap.at("steps").get<int>()});
    result.ms_mean = metrics.at("ms_mean").get<double>();
    result.cr_percent = metrics.at("cr_percent").get<double>();
    result.total_collisions = metrics.at("total_collisions").get<int>();
    result.obstacle_encounters = metrics.at("obstacle_encounters").get<int>();
    result.evaluator_calls = metrics.at("evaluator_calls").get<long>();
    result.weight_underflow_steps = metrics.at("weight_underflow_steps").get<int>();
    result.nonfinite_costs = metrics.at("nonfinite_costs").get<int>();
    result.timeouts = metrics.at("timeouts").get<int>();
    result.aborted_laps = metrics.at("aborted_laps").get<int>();
  }

  {
    std::ifstream in(dir / kManifestFile);
    if (!in) throw IoError("cannot open " + (dir / kManifestFile).string());
    nlohmann::json manifest = nlohmann::json::parse(in);
    result.solve_ms_mean = manifest.at("timing").at("solve_ms_mean").get<double>();
    result.solve_ms_max = manifest.at("timing").at("solve_ms_max").get<double>();
  }

  {
    std::ifstream in(dir / kTrajectoryFile);
    if (!in) throw IoError("cannot open " + (dir / kTrajectoryFile).string());
    std::string line;
    if (!std::getline(in, line) || line != "t,x,y,yaw,steer_cmd,S")
      throw IoError("bad trajectory header in " + out_dir);
    int lap = 0;
    int remaining = result.laps.empty() ? 0 : result.laps[0].steps;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      StepRecord row;
      char c[5];
      std::istringstream fields(line);
      if (!(fields >> row.t >> c[0] >> row.x >> c[1] >> row.y >> c[2] >> row.yaw >> c[3] >>
            row.steer_cmd >> c[4] >> row.cost))
        throw IoError("bad trajectory row in " + out_dir);
      while (remaining == 0 && lap + 1 < static_cast<int>(result.laps.size()))
        remaining = result.laps[++lap].steps;
      row.lap = lap;
      if (remaining > 0) --remaining;
      result.step_log.push_back(row);
    }
  }
  return result;
}

}  // namespace svgmppi
