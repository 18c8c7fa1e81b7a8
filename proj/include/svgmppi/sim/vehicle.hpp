#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <vector>

#include "svgmppi/core/types.hpp"

namespace svgmppi {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double angle) {
  double r = std::remainder(angle, 2.0 * M_PI);
  if (r <= -M_PI) r += 2.0 * M_PI;
  return r;
}

struct VehicleParams {
  double wheelbase = 0.33;           // m
  double steer_limit = 0.4;          // rad
  double steer_time_constant = 0.1;  // s; 0 means the delayed command holds exactly
  int dead_time_steps = 2;           // control periods of actuation dead time
  double dt = 0.05;                  // s

  static constexpr int kMaxDeadTime = 15;

  void validate() const {
    if (!(wheelbase > 0.0)) throw ConfigError("vehicle.wheelbase must be > 0");
    if (!(dt > 0.0)) throw ConfigError("vehicle.dt must be > 0");
    if (steer_time_constant < 0.0) throw ConfigError("vehicle.steer_time_constant must be >= 0");
    if (!(steer_limit > 0.0)) throw ConfigError("vehicle.steer_limit must be > 0");
    if (dead_time_steps < 0 || dead_time_steps > kMaxDeadTime)
      throw ConfigError("vehicle.dead_time_steps out of range");
  }
};

/// Kinematic bicycle state with steering actuation delay. The queue holds
/// the most recent `dead_time_steps` commands that have not yet reached the
/// steering actuator.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // rad, wrapped to (-pi, pi]
  double v = 0.0;    // m/s
  double steer_actual = 0.0;
  std::array<double, VehicleParams::kMaxDeadTime> steer_queue{};

  bool operator==(const VehicleState& other) const {
    return x == other.x && y == other.y && yaw == other.yaw && v == other.v &&
           steer_actual == other.steer_actual && steer_queue == other.steer_queue;
  }
};

/// Advances the state by one period: the commanded steering enters the dead
/// time queue, the oldest queued command drives a first-order steering lag,
/// and the pose integrates the bicycle kinematics. Speed snaps to the given
/// reference; the planner controls steering only.
inline VehicleState step(const VehicleState& state, double commanded_steer, double speed_ref,
                         const VehicleParams& params) {
  VehicleState next = state;

  const double cmd = std::clamp(commanded_steer, -params.steer_limit, params.steer_limit);
  double delayed = cmd;
  if (params.dead_time_steps > 0) {
    delayed = next.steer_queue[0];
    for (int i = 0; i + 1 < params.dead_time_steps; ++i)
      next.steer_queue[i] = next.steer_queue[i + 1];
    next.steer_queue[params.dead_time_steps - 1] = cmd;
  }

  if (params.steer_time_constant > 0.0) {
    const double alpha = std::min(params.dt / params.steer_time_constant, 1.0);
    next.steer_actual += alpha * (delayed - next.steer_actual);
  } else {
    next.steer_actual = delayed;
  }
  next.steer_actual = std::clamp(next.steer_actual, -params.steer_limit, params.steer_limit);

  next.x += state.v * std::cos(state.yaw) * params.dt;
  next.y += state.v * std::sin(state.yaw) * params.dt;
  next.yaw = wrap_angle(state.yaw +
                        state.v * std::tan(next.steer_actual) / params.wheelbase * params.dt);
  next.v = speed_ref;
  return next;
}

/// Rolls an input sequence out from x0. Returns T+1 states with
/// trajectory[0] == x0. Pure function of its arguments.
inline void rollout_into(const VehicleState& x0, const MatView& seq,
                         const double* speed_profile, const VehicleParams& params,
                         VehicleState* trajectory) {
  trajectory[0] = x0;
  const int horizon = static_cast<int>(seq.rows());
  for (int t = 0; t < horizon; ++t)
    trajectory[t + 1] = step(trajectory[t], seq(t, 0), speed_profile[t], params);
}

inline std::vector<VehicleState> rollout(const VehicleState& x0, const Mat& seq,
                                         const std::vector<double>& speed_profile,
                                         const VehicleParams& params) {
  if (static_cast<int>(speed_profile.size()) < seq.rows())
    throw ConfigError("rollout: speed profile shorter than horizon");
  std::vector<VehicleState> trajectory(seq.rows() + 1);
  rollout_into(x0, MatView(seq.data(), seq.rows(), seq.cols()), speed_profile.data(), params,
               trajectory.data());
  return trajectory;
}

inline std::vector<VehicleState> rollout(const VehicleState& x0, const ControlSequence& seq,
                                         const std::vector<double>& speed_profile,
                                         const VehicleParams& params) {
  return rollout(x0, seq.values(), speed_profile, params);
}

}  // namespace svgmppi
