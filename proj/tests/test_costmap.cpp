#include "svgmppi/sim/costmap.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "svgmppi/sim/waypoints.hpp"

namespace svgmppi {
namespace {

TEST(Costmap, EmptyMapCenterIsFree) {
  const GridMap map = GridMap::make(40, 40, 0.05, -1.0, -1.0);
  EXPECT_EQ(collision_indicator(map, 0.0, 0.0), 0);
}

TEST(Costmap, OutOfBoundsIsCollision) {
  const GridMap map = GridMap::make(20, 20, 0.1, 0.0, 0.0);
  EXPECT_EQ(collision_indicator(map, -0.05, 1.0), 1);   // one cell left of the map
  EXPECT_EQ(collision_indicator(map, 2.05, 1.0), 1);    // one cell right
  EXPECT_EQ(collision_indicator(map, 1.0, -0.01), 1);
  EXPECT_EQ(collision_indicator(map, 1.0, 1.0), 0);
}

TEST(Costmap, NoObstaclesNoInflationEqualsTrack) {
  GridMap track = GridMap::make(30, 20, 0.05, 0.0, 0.0);
  track.at(4, 7) = 1;
  track.at(12, 3) = 1;
  const GridMap out = rasterize(track, {}, 0.0);
  EXPECT_EQ(out.cells, track.cells);
}

TEST(Costmap, DiskOccupancyMatchesBruteForceBand) {
  const GridMap track = GridMap::make(80, 80, 0.05, -2.0, -2.0);
  const ObstacleSpec obstacle{0.3, -0.2, 0.25};
  const double inflation = 0.15;
  const GridMap out = rasterize(track, {obstacle}, inflation);

  const double r = obstacle.radius + inflation;
  const double slack = out.resolution * std::sqrt(2.0);
  for (int iy = 0; iy < out.height; ++iy) {
    for (int ix = 0; ix < out.width; ++ix) {
      const double dx = out.center_x(ix) - obstacle.x;
      const double dy = out.center_y(iy) - obstacle.y;
      const double dist = std::hypot(dx, dy);
      if (dist <= r) {
        EXPECT_EQ(out.at(ix, iy), 1) << ix << "," << iy;
      } else if (dist > r + slack) {
        EXPECT_EQ(out.at(ix, iy), 0) << ix << "," << iy;
      }
    }
  }
}

TEST(Costmap, OverlappingDisksUnion) {
  const GridMap track = GridMap::make(60, 60, 0.05, 0.0, 0.0);
  const ObstacleSpec a{1.4, 1.5, 0.2};
  const ObstacleSpec b{1.6, 1.5, 0.2};
  const GridMap map_a = rasterize(track, {a}, 0.0);
  const GridMap map_b = rasterize(track, {b}, 0.0);
  const GridMap map_ab = rasterize(track, {a, b}, 0.0);
  for (std::size_t i = 0; i < map_ab.cells.size(); ++i)
    EXPECT_EQ(map_ab.cells[i], map_a.cells[i] | map_b.cells[i]);
}

TEST(Costmap, ObstacleOutsideMapIsClipped) {
  const GridMap track = GridMap::make(10, 10, 0.1, 0.0, 0.0);
  const GridMap out = rasterize(track, {{5.0, 5.0, 0.3}}, 0.1);
  for (const auto cell : out.cells) EXPECT_EQ(cell, 0);
}

TEST(Costmap, WallInflationDilatesByRadius) {
  GridMap track = GridMap::make(40, 40, 0.05, 0.0, 0.0);
  track.at(20, 20) = 1;
  const GridMap out = rasterize(track, {}, 0.1);
  // Cells whose centers are within 0.1 m of the occupied cell's center
  // offset grid become occupied via the dilation kernel.
  EXPECT_EQ(out.at(20, 20), 1);
  EXPECT_EQ(out.at(22, 20), 1);  // 0.10 m away
  EXPECT_EQ(out.at(23, 20), 0);  // 0.15 m away
}

TEST(Costmap, IndicatorConsistentWithRasterize) {
  const GridMap track = GridMap::make(100, 100, 0.05, -2.5, -2.5);
  const ObstacleSpec obstacle{0.0, 0.0, 0.3};
  const GridMap out = rasterize(track, {obstacle}, 0.1);
  // Sampled points strictly inside the inflated disk minus a boundary band.
  for (int i = 0; i < 500; ++i) {
    const double angle = 2.0 * M_PI * i / 500.0;
    const double radius = 0.3 * (i % 10) / 10.0;
    EXPECT_EQ(collision_indicator(out, radius * std::cos(angle), radius * std::sin(angle)), 1);
  }
}

TEST(Costmap, GridFileRoundTrip) {
  GridMap map = GridMap::make(17, 9, 0.25, -1.5, 2.0);
  map.at(3, 2) = 1;
  map.at(16, 8) = 1;
  const std::string path =
      (std::filesystem::temp_directory_path() / "svgmppi_grid_test.grid").string();
  save_grid(map, path);
  const GridMap loaded = load_grid(path);
  EXPECT_EQ(loaded.width, map.width);
  EXPECT_EQ(loaded.height, map.height);
  EXPECT_DOUBLE_EQ(loaded.resolution, map.resolution);
  EXPECT_DOUBLE_EQ(loaded.origin_x, map.origin_x);
  EXPECT_DOUBLE_EQ(loaded.origin_y, map.origin_y);
  EXPECT_EQ(loaded.cells, map.cells);
  std::filesystem::remove(path);
}

TEST(Costmap, LoadRejectsBadHeader) {
  const auto path = std::filesystem::temp_directory_path() / "svgmppi_bad.grid";
  std::ofstream(path) << "gridv9 2 2 0.1 0 0\n##\n##\n";
  EXPECT_THROW(load_grid(path.string()), IoError);
  std::filesystem::remove(path);
}

WaypointPath straight_path(int count, double spacing, double speed = 1.0) {
  std::vector<Waypoint> points(count);
  for (int i = 0; i < count; ++i) points[i] = {i * spacing, 0.0, 0.0, speed};
  return WaypointPath(points, /*closed=*/false);
}

TEST(PlaceObstacles, ZeroOffsetLandsOnWaypoints) {
  const WaypointPath path = straight_path(100, 0.1);
  const auto stream = rng::make_stream(4, rng::Purpose::kObstacles);
  const auto obstacles = place_obstacles(path, 5, 0.0, 0.1, 0.5, stream);
  ASSERT_EQ(obstacles.size(), 5u);
  for (const auto& o : obstacles) {
    bool on_waypoint = false;
    for (const auto& wp : path.points())
      if (wp.x == o.x && wp.y == o.y) on_waypoint = true;
    EXPECT_TRUE(on_waypoint);
  }
}

TEST(PlaceObstacles, FixedSeedReproducesLayout) {
  const WaypointPath path = straight_path(200, 0.1);
  const auto stream = rng::make_stream(11, rng::Purpose::kObstacles, 3);
  const auto a = place_obstacles(path, 5, 0.1, 0.12, 1.0, stream);
  const auto b = place_obstacles(path, 5, 0.1, 0.12, 1.0, stream);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
  }
  const auto c = place_obstacles(path, 5, 0.1, 0.12, 1.0,
                                 rng::make_stream(11, rng::Purpose::kObstacles, 4));
  bool any_diff = false;
  for (int i = 0; i < 5; ++i) any_diff = any_diff || c[i].x != a[i].x;
  EXPECT_TRUE(any_diff);
}

TEST(PlaceObstacles, SeparationEnforced) {
  const WaypointPath path = straight_path(400, 0.1);  // 39.9 m
  for (int seed = 0; seed < 20; ++seed) {
    const auto obstacles = place_obstacles(
        path, 5, 0.0, 0.1, 2.0, rng::make_stream(seed, rng::Purpose::kObstacles));
    for (std::size_t i = 0; i < obstacles.size(); ++i)
      for (std::size_t j = i + 1; j < obstacles.size(); ++j)
        EXPECT_GE(std::fabs(obstacles[i].x - obstacles[j].x), 2.0 - 1e-9);
  }
}

TEST(PlaceObstacles, ShortTrackRelaxesSeparationWithDiagnostic) {
  const WaypointPath path = straight_path(10, 0.1);  // 0.9 m total
  PlacementDiagnostics diag;
  const auto obstacles = place_obstacles(path, 5, 0.0, 0.1, 10.0,
                                         rng::make_stream(1, rng::Purpose::kObstacles), &diag);
  EXPECT_EQ(obstacles.size(), 5u);
  EXPECT_GT(diag.separation_reductions, 0);
}

TEST(PlaceObstacles, OffsetsUniformInDisk) {
  // 1000 draws: every offset within max_offset; radius^2 and angle pass a
  // 10-bin chi-square test at the 5% level (critical value 16.919).
  const WaypointPath path = straight_path(3, 1.0);
  const double max_offset = 0.1;
  int r2_bins[10] = {0}, angle_bins[10] = {0};
  int n = 0;
  for (int seed = 0; seed < 200; ++seed) {
    const auto obstacles = place_obstacles(
        path, 5, max_offset, 0.05, 0.0, rng::make_stream(seed, rng::Purpose::kObstacles));
    for (const auto& o : obstacles) {
      double best = 1e9;
      const Waypoint* nearest = nullptr;
      for (const auto& wp : path.points()) {
        const double d = std::hypot(o.x - wp.x, o.y - wp.y);
        if (d < best) {
          best = d;
          nearest = &wp;
        }
      }
      ASSERT_LE(best, max_offset + 1e-12);
      const double dx = o.x - nearest->x;
      const double dy = o.y - nearest->y;
      const double r2 = (dx * dx + dy * dy) / (max_offset * max_offset);
      double angle = std::atan2(dy, dx);
      if (angle < 0) angle += 2.0 * M_PI;
      ++r2_bins[std::min(9, static_cast<int>(r2 * 10))];
      ++angle_bins[std::min(9, static_cast<int>(angle / (2.0 * M_PI) * 10))];
      ++n;
    }
  }
  ASSERT_EQ(n, 1000);
  const double expected = n / 10.0;
  double chi2_r2 = 0.0, chi2_angle = 0.0;
  for (int b = 0; b < 10; ++b) {
    chi2_r2 += (r2_bins[b] - expected) * (r2_bins[b] - expected) / expected;
    chi2_angle += (angle_bins[b] - expected) * (angle_bins[b] - expected) / expected;
  }
  EXPECT_LT(chi2_r2, 16.919);
  EXPECT_LT(chi2_angle, 16.919);
}

}  // namespace
}  // namespace svgmppi
