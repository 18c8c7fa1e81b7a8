#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "svgmppi/core/types.hpp"
#include "svgmppi/sim/costmap.hpp"
#include "svgmppi/sim/vehicle.hpp"

namespace svgmppi {

struct Waypoint {
  double x = 0.0;     // m
  double y = 0.0;     // m
  double yaw = 0.0;   // rad
  double speed = 0.0; // m/s
};

/// Reference path with per-waypoint speeds. `closed` marks a lap course
/// whose last point connects back to the first.
class WaypointPath {
 public:
  WaypointPath() = default;
  WaypointPath(std::vector<Waypoint> points, bool closed)
      : points_(std::move(points)), closed_(closed) {
    if (points_.size() < 2) throw ConfigError("WaypointPath: need at least 2 points");
    arc_.resize(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double d = segment_length(points_[i - 1], points_[i]);
      if (!(d > 0.0)) throw ConfigError("WaypointPath: consecutive points must be distinct");
      arc_[i] = arc_[i - 1] + d;
    }
    total_length_ = arc_.back();
    if (closed_) total_length_ += segment_length(points_.back(), points_.front());
  }

  int size() const { return static_cast<int>(points_.size()); }
  bool closed() const { return closed_; }
  const Waypoint& operator[](int i) const { return points_[wrap_index(i)]; }
  const std::vector<Waypoint>& points() const { return points_; }

  /// Arc-length position of a waypoint from the path start.
  double arc_at(int index) const { return arc_[wrap_index(index)]; }
  double total_length() const { return total_length_; }

  int wrap_index(int i) const {
    const int n = size();
    if (closed_) {
      i %= n;
      return i < 0 ? i + n : i;
    }
    return std::min(std::max(i, 0), n - 1);
  }

  /// Shortest along-path distance between two waypoint indices.
  double arc_separation(int i, int j) const {
    double d = std::fabs(arc_at(i) - arc_at(j));
    if (closed_) d = std::min(d, total_length_ - d);
    return d;
  }

  /// Speed reference at an arc position (nearest waypoint behind s).
  double speed_at_arc(double s) const {
    if (closed_) {
      s = std::fmod(s, total_length_);
      if (s < 0.0) s += total_length_;
    }
    int lo = 0, hi = size() - 1;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (arc_[mid] <= s) lo = mid; else hi = mid - 1;
    }
    return points_[lo].speed;
  }

  static double segment_length(const Waypoint& a, const Waypoint& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
  }

 private:
  std::vector<Waypoint> points_;
  std::vector<double> arc_;
  bool closed_ = false;
  double total_length_ = 0.0;
};

/// Result of a nearest-reference query.
struct NearestRef {
  int index = 0;        // nearest waypoint
  double distance = 0.0;  // m, to the segment projection at that waypoint
  double yaw_error = 0.0; // rad, wrapped difference query yaw - waypoint yaw
};

namespace detail {

inline double point_segment_distance(double px, double py, const Waypoint& a,
                                     const Waypoint& b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

}  // namespace detail

/// Locally nearest reference around `hint`: the waypoint with minimum
/// Euclidean distance within +/- `window` indices, with the reported
/// distance refined by projecting onto the adjacent segments. Windowed
/// search keeps lap progress monotone on self-crossing-free courses.
inline NearestRef nearest_reference(const WaypointPath& path, double x, double y, double yaw,
                                    int hint, int window) {
  const int n = path.size();
  int lo = hint - window;
  int hi = hint + window;
  if (!path.closed()) {
    lo = std::max(lo, 0);
    hi = std::min(hi, n - 1);
  } else if (hi - lo + 1 >= n) {
    lo = 0;
    hi = n - 1;
  }

  int best = path.wrap_index(lo);
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = lo; i <= hi; ++i) {
    const Waypoint& wp = path[i];
    const double dx = x - wp.x;
    const double dy = y - wp.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = path.wrap_index(i);
    }
  }

  double dist = std::sqrt(best_d2);
  const Waypoint& wp = path[best];
  if (path.closed() || best > 0)
    dist = std::min(dist, detail::point_segment_distance(x, y, path[best - 1], wp));
  if (path.closed() || best < n - 1)
    dist = std::min(dist, detail::point_segment_distance(x, y, wp, path[best + 1]));

  NearestRef ref;
  ref.index = best;
  ref.distance = dist;
  ref.yaw_error = wrap_angle(yaw - wp.yaw);
  return ref;
}

/// CSV waypoint file: header "x,y,yaw,speed" then one point per line.
inline WaypointPath load_waypoints(const std::string& path, bool closed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open waypoint file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,yaw,speed", 0) != 0)
    throw IoError("waypoint file missing 'x,y,yaw,speed' header: " + path);
  std::vector<Waypoint> points;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    Waypoint wp;
    char c1, c2, c3;
    if (!(row >> wp.x >> c1 >> wp.y >> c2 >> wp.yaw >> c3 >> wp.speed) || c1 != ',' ||
        c2 != ',' || c3 != ',')
      throw IoError("bad waypoint row " + std::to_string(line_no) + " in " + path);
    points.push_back(wp);
  }
  return WaypointPath(std::move(points), closed);
}

inline void save_waypoints(const WaypointPath& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write waypoint file: " + file);
  out << "x,y,yaw,speed\n";
  out.precision(17);
  for (const auto& wp : path.points())
    out << wp.x << ',' << wp.y << ',' << wp.yaw << ',' << wp.speed << '\n';
}

struct PlacementDiagnostics {
  int separation_reductions = 0;  // times the separation had to be relaxed
};

/// Keep-out window along the path (e.g. around the vehicle's spawn point)
/// that obstacle waypoints must avoid.
struct PlacementExclusion {
  double center_arc = 0.0;
  double half_width = 0.0;  // m along the path; 0 disables
};

/// Draws obstacle positions for one lap: `count` waypoints with pairwise
/// arc separation >= min_separation (relaxed with a diagnostic when the
/// track is too short), each offset uniformly within a disk of radius
/// max_offset around its waypoint.
inline std::vector<ObstacleSpec> place_obstacles(const WaypointPath& path, int count,
                                                 double max_offset, double radius,
                                                 double min_separation,
                                                 const rng::Stream& stream,
                                                 PlacementDiagnostics* diag = nullptr,
                                                 const PlacementExclusion& exclusion = {}) {
  if (count < 1) throw ConfigError("place_obstacles: count must be >= 1");
  if (max_offset < 0.0) throw ConfigError("place_obstacles: max_offset must be >= 0");

  std::uint64_t draw = 0;
  const auto next_uniform = [&]() { return rng::uniform_pair(stream, draw++, 0)[0]; };
  const auto excluded = [&](int index) {
    if (exclusion.half_width <= 0.0) return false;
    double d = std::fabs(path.arc_at(index) - exclusion.center_arc);
    if (path.closed()) d = std::min(d, path.total_length() - d);
    return d < exclusion.half_width;
  };

  std::vector<int> indices(count);
  double separation = min_separation;
  constexpr int kMaxAttempts = 200;
  for (;;) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      for (int i = 0; i < count; ++i)
        indices[i] = std::min(path.size() - 1,
                              static_cast<int>(next_uniform() * path.size()));
      ok = true;
      for (int i = 0; i < count && ok; ++i) {
        if (excluded(indices[i])) ok = false;
        for (int j = i + 1; j < count && ok; ++j)
          if (path.arc_separation(indices[i], indices[j]) < separation) ok = false;
      }
    }
    if (ok) break;
    separation *= 0.5;
    if (diag != nullptr) ++diag->separation_reductions;
    if (separation < path.total_length() * 1e-9) break;  // give up; duplicates allowed
  }

  std::vector<ObstacleSpec> obstacles(count);
  for (int i = 0; i < count; ++i) {
    const Waypoint& wp = path[indices[i]];
    const double r = max_offset * std::sqrt(next_uniform());
    const double angle = 2.0 * M_PI * next_uniform();
    obstacles[i] = ObstacleSpec{wp.x + r * std::cos(angle), wp.y + r * std::sin(angle), radius};
  }
  return obstacles;
}

}  // namespace svgmppi
