// Generates the bundled benchmark course: a closed loop with two straights,
// two 180-degree curves, and a chicane on the top straight. Writes the
// occupancy grid and the waypoint CSV consumed by the scenario harness.
//
// Usage: gen_track <out_dir>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "svgmppi/sim/costmap.hpp"
#include "svgmppi/sim/waypoints.hpp"

namespace {

struct Point {
  double x, y;
};

double kStraight = 6.0;      // m
double kRadius = 1.5;        // m, 180-degree end curves
double kWidth = 1.4;         // m, corridor width
double kChicaneAmp = 0.3;    // m
double kChicaneLen = 4.5;    // m
double kResolution = 0.05;   // m / cell
double kSpacing = 0.1;       // m between waypoints
double kSpeedMax = 1.8;      // m/s
double kLatAccel = 1.5;      // m/s^2 cap for curve speeds
double kSpeedMin = 0.8;      // m/s floor

// Centerline parameterized by arc length of the base stadium (chicane offset
// applied on the top straight).
Point centerline(double s, double total) {
  s = std::fmod(s, total);
  if (s < 0) s += total;
  const double arc = M_PI * kRadius;
  // bottom straight: (0,0) -> (L,0)
  if (s < kStraight) return {s, 0.0};
  s -= kStraight;
  // right 180-degree curve around (L, R)
  if (s < arc) {
    const double a = s / kRadius;  // 0..pi
    return {kStraight + kRadius * std::sin(a), kRadius - kRadius * std::cos(a)};
  }
  s -= arc;
  // top straight: (L, 2R) -> (0, 2R), with chicane in the middle
  if (s < kStraight) {
    const double x = kStraight - s;
    double y = 2.0 * kRadius;
    const double mid = kStraight / 2.0;
    if (std::fabs(s - mid) < kChicaneLen / 2.0) {
      const double t = (s - (mid - kChicaneLen / 2.0)) / kChicaneLen;  // 0..1
      y += kChicaneAmp * std::sin(2.0 * M_PI * t);
    }
    return {x, y};
  }
  s -= kStraight;
  // left 180-degree curve around (0, R)
  const double a = s / kRadius;
  return {-kRadius * std::sin(a), kRadius + kRadius * std::cos(a)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr,
                 "usage: gen_track <out_dir> [speed_max lat_accel radius width chicane_amp]\n");
    return 1;
  }
  const std::string out_dir = argv[1];
  if (argc > 2) kSpeedMax = std::atof(argv[2]);
  if (argc > 3) kLatAccel = std::atof(argv[3]);
  if (argc > 4) kRadius = std::atof(argv[4]);
  if (argc > 5) kWidth = std::atof(argv[5]);
  if (argc > 6) kChicaneAmp = std::atof(argv[6]);

  const double total = 2.0 * kStraight + 2.0 * M_PI * kRadius;

  // Dense polyline for rasterization and arc-accurate spacing.
  std::vector<Point> dense;
  const int dense_n = static_cast<int>(total / 0.01);
  for (int i = 0; i < dense_n; ++i) dense.push_back(centerline(i * total / dense_n, total));

  // Resample to uniform true arc length.
  std::vector<double> cum(dense.size() + 1, 0.0);
  for (std::size_t i = 1; i <= dense.size(); ++i) {
    const Point& a = dense[i - 1];
    const Point& b = dense[i % dense.size()];
    cum[i] = cum[i - 1] + std::hypot(b.x - a.x, b.y - a.y);
  }
  const double true_len = cum.back();
  const int n_wp = static_cast<int>(true_len / kSpacing);

  std::vector<svgmppi::Waypoint> waypoints(n_wp);
  std::size_t seg = 0;
  for (int i = 0; i < n_wp; ++i) {
    const double target = i * true_len / n_wp;
    while (seg + 1 < cum.size() - 1 && cum[seg + 1] < target) ++seg;
    const Point& a = dense[seg];
    const Point& b = dense[(seg + 1) % dense.size()];
    const double t = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
    waypoints[i].x = a.x + t * (b.x - a.x);
    waypoints[i].y = a.y + t * (b.y - a.y);
  }
  for (int i = 0; i < n_wp; ++i) {
    const auto& prev = waypoints[(i + n_wp - 1) % n_wp];
    const auto& next = waypoints[(i + 1) % n_wp];
    waypoints[i].yaw = std::atan2(next.y - prev.y, next.x - prev.x);
  }
  // Curvature-capped speed profile, smoothed with a trailing minimum so the
  // vehicle slows before a curve rather than inside it.
  std::vector<double> speed(n_wp, kSpeedMax);
  for (int i = 0; i < n_wp; ++i) {
    const auto& prev = waypoints[(i + n_wp - 1) % n_wp];
    const auto& next = waypoints[(i + 1) % n_wp];
    const double dyaw = svgmppi::wrap_angle(next.yaw - prev.yaw);
    const double ds = 2.0 * kSpacing;
    const double curvature = std::fabs(dyaw / ds);
    if (curvature > 1e-6)
      speed[i] = std::min(kSpeedMax, std::max(kSpeedMin, std::sqrt(kLatAccel / curvature)));
  }
  const int lookahead = static_cast<int>(1.5 / kSpacing);  // slow down 1.5 m early
  for (int i = 0; i < n_wp; ++i) {
    double v = speed[i];
    for (int j = 1; j <= lookahead; ++j) v = std::min(v, speed[(i + j) % n_wp]);
    waypoints[i].speed = v;
  }

  // Occupancy grid: occupied unless within kWidth/2 of the centerline.
  const double margin = 1.0;
  const double min_x = -kRadius - kWidth / 2 - margin;
  const double max_x = kStraight + kRadius + kWidth / 2 + margin;
  const double min_y = -kWidth / 2 - margin;
  const double max_y = 2.0 * kRadius + kChicaneAmp + kWidth / 2 + margin;
  const int width = static_cast<int>(std::ceil((max_x - min_x) / kResolution));
  const int height = static_cast<int>(std::ceil((max_y - min_y) / kResolution));
  svgmppi::GridMap map = svgmppi::GridMap::make(width, height, kResolution, min_x, min_y, 1);

  const double half = kWidth / 2.0;
  for (int iy = 0; iy < height; ++iy) {
    for (int ix = 0; ix < width; ++ix) {
      const double cx = map.center_x(ix);
      const double cy = map.center_y(iy);
      double best = 1e9;
      for (const auto& p : dense) {
        const double dx = cx - p.x;
        const double dy = cy - p.y;
        best = std::min(best, dx * dx + dy * dy);
        if (best <= half * half) break;
      }
      if (best <= half * half) map.at(ix, iy) = 0;
    }
  }

  svgmppi::save_grid(map, out_dir + "/track.grid");
  svgmppi::WaypointPath path(waypoints, /*closed=*/true);
  svgmppi::save_waypoints(path, out_dir + "/waypoints.csv");
  std::printf("track: %d x %d cells, %.2f m lap, %d waypoints\n", width, height,
              path.total_length(), n_wp);
  return 0;
}
