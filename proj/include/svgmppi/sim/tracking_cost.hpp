#pragma once

#include <atomic>
#include <vector>

#include "svgmppi/sim/costmap.hpp"
#include "svgmppi/sim/vehicle.hpp"
#include "svgmppi/sim/waypoints.hpp"

namespace svgmppi {

// Sequence state cost stage weights: position deviation squared, yaw
// deviation squared, binary collision.
inline constexpr double kPosWeight = 1.0;
inline constexpr double kYawWeight = 0.01;
inline constexpr double kCollisionWeight = 1000.0;

/// Sequence state cost over a rolled-out trajectory (all T+1 states):
///   sum_t  dd_r^2 + 0.01 dtheta_r^2 + 1000 * collide
/// The nearest-reference hint advances monotonically along the states.
inline double sequence_state_cost(const VehicleState* states, int n_states,
                                  const WaypointPath& path, const GridMap& map, int hint,
                                  int window, int* hint_out = nullptr) {
  double cost = 0.0;
  for (int s = 0; s < n_states; ++s) {
    const VehicleState& state = states[s];
    const NearestRef ref = nearest_reference(path, state.x, state.y, state.yaw, hint, window);
    hint = ref.index;
    cost += kPosWeight * ref.distance * ref.distance +
            kYawWeight * ref.yaw_error * ref.yaw_error +
            kCollisionWeight * collision_indicator(map, state.x, state.y);
  }
  if (hint_out != nullptr) *hint_out = hint;
  return cost;
}

inline double sequence_state_cost(const std::vector<VehicleState>& trajectory,
                                  const WaypointPath& path, const GridMap& map, int hint = 0,
                                  int window = 20) {
  return sequence_state_cost(trajectory.data(), static_cast<int>(trajectory.size()), path, map,
                             hint, window);
}

/// Cost oracle for the solver: rolls an input sequence out from the bound
/// state and accumulates the sequence state cost. Pure per call aside from
/// the call counter, hence safe under concurrent evaluation.
class TrackingCostEvaluator {
 public:
  static constexpr int kMaxHorizon = 60;

  TrackingCostEvaluator(const GridMap& map, const WaypointPath& path,
                        const VehicleParams& params, const VehicleState& x0,
                        std::vector<double> speed_profile, int hint, int window = 20)
      : map_(&map), path_(&path), params_(params), x0_(x0),
        speed_profile_(std::move(speed_profile)), hint_(hint), window_(window) {
    if (static_cast<int>(speed_profile_.size()) > kMaxHorizon)
      throw ConfigError("TrackingCostEvaluator: horizon too long");
  }

  double operator()(const MatView& seq) const {
    calls_.fetch_add(1, std::memory_order_relaxed);
    VehicleState trajectory[kMaxHorizon + 1];
    rollout_into(x0_, seq, speed_profile_.data(), params_, trajectory);
    return sequence_state_cost(trajectory, static_cast<int>(seq.rows()) + 1, *path_, *map_,
                               hint_, window_);
  }

  long calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() const { calls_.store(0, std::memory_order_relaxed); }

 private:
  const GridMap* map_;
  const WaypointPath* path_;
  VehicleParams params_;
  VehicleState x0_;
  std::vector<double> speed_profile_;
  int hint_;
  int window_;
  mutable std::atomic<long> calls_{0};
};

/// Reference speed profile for the next T steps assuming the vehicle tracks
/// the waypoint speeds from `start_arc` onward.
inline std::vector<double> reference_speed_profile(const WaypointPath& path, double start_arc,
                                                   int horizon, double dt) {
  std::vector<double> profile(horizon);
  double s = start_arc;
  for (int t = 0; t < horizon; ++t) {
    profile[t] = path.speed_at_arc(s);
    s += profile[t] * dt;
  }
  return profile;
}

}  // namespace svgmppi
