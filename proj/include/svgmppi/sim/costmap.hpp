#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "svgmppi/core/rng.hpp"
#include "svgmppi/core/types.hpp"

namespace svgmppi {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Row-major 2D occupancy grid. Cell (0, 0) covers the square whose lower
/// left corner is the origin. Immutable after construction in all query
/// paths, so concurrent reads are unrestricted.
struct GridMap {
  int width = 0;   // cells
  int height = 0;  // cells
  double resolution = 0.05;  // m / cell
  double origin_x = 0.0;     // m, world position of cell (0,0) corner
  double origin_y = 0.0;
  std::vector<std::uint8_t> cells;  // 0 free, 1 occupied; row-major, row = y

  static GridMap make(int width, int height, double resolution, double origin_x,
                      double origin_y, std::uint8_t fill = 0) {
    if (width < 1 || height < 1) throw ConfigError("GridMap: width/height must be >= 1");
    if (!(resolution > 0.0)) throw ConfigError("GridMap: resolution must be > 0");
    GridMap map;
    map.width = width;
    map.height = height;
    map.resolution = resolution;
    map.origin_x = origin_x;
    map.origin_y = origin_y;
    map.cells.assign(static_cast<std::size_t>(width) * height, fill);
    return map;
  }

  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && ix < width && iy >= 0 && iy < height;
  }

  std::uint8_t& at(int ix, int iy) { return cells[static_cast<std::size_t>(iy) * width + ix]; }
  std::uint8_t at(int ix, int iy) const {
    return cells[static_cast<std::size_t>(iy) * width + ix];
  }

  int cell_x(double x) const { return static_cast<int>(std::floor((x - origin_x) / resolution)); }
  int cell_y(double y) const { return static_cast<int>(std::floor((y - origin_y) / resolution)); }

  double center_x(int ix) const { return origin_x + (ix + 0.5) * resolution; }
  double center_y(int iy) const { return origin_y + (iy + 0.5) * resolution; }
};

/// Binary collision indicator for a world position: 1 iff the containing
/// cell is occupied. Out-of-bounds counts as a collision (leaving the
/// course is a crash).
inline int collision_indicator(const GridMap& map, double x, double y) {
  const int ix = map.cell_x(x);
  const int iy = map.cell_y(y);
  if (!map.in_bounds(ix, iy)) return 1;
  return map.at(ix, iy) ? 1 : 0;
}

struct ObstacleSpec {
  double x = 0.0;  // m
  double y = 0.0;
  double radius = 0.1;  // m
};

/// Builds the planning map from the track's static occupancy plus obstacle
/// disks. Both are dilated by `inflation` (the vehicle half-width) so that
/// point-footprint collision checks are conservative for the real body.
/// Obstacles partly or fully outside the map are clipped.
inline GridMap rasterize(const GridMap& track, const std::vector<ObstacleSpec>& obstacles,
                         double inflation) {
  if (inflation < 0.0) throw ConfigError("rasterize: inflation must be >= 0");
  GridMap out = track;
  out.cells.assign(out.cells.size(), 0);

  // Dilate static occupancy.
  const int r_cells = static_cast<int>(std::ceil(inflation / track.resolution));
  const double infl2 = inflation * inflation;
  for (int iy = 0; iy < track.height; ++iy) {
    for (int ix = 0; ix < track.width; ++ix) {
      if (!track.at(ix, iy)) continue;
      for (int dy = -r_cells; dy <= r_cells; ++dy) {
        for (int dx = -r_cells; dx <= r_cells; ++dx) {
          const int jx = ix + dx;
          const int jy = iy + dy;
          if (!out.in_bounds(jx, jy)) continue;
          const double ddx = dx * track.resolution;
          const double ddy = dy * track.resolution;
          if (ddx * ddx + ddy * ddy <= infl2) out.at(jx, jy) = 1;
        }
      }
    }
  }

  // Stamp inflated obstacle disks: a cell is occupied iff its center lies
  // within radius + inflation of the obstacle center.
  for (const auto& obstacle : obstacles) {
    if (!(obstacle.radius > 0.0)) throw ConfigError("rasterize: obstacle radius must be > 0");
    const double r = obstacle.radius + inflation;
    const int min_x = std::max(0, out.cell_x(obstacle.x - r) - 1);
    const int max_x = std::min(out.width - 1, out.cell_x(obstacle.x + r) + 1);
    const int min_y = std::max(0, out.cell_y(obstacle.y - r) - 1);
    const int max_y = std::min(out.height - 1, out.cell_y(obstacle.y + r) + 1);
    for (int iy = min_y; iy <= max_y; ++iy) {
      for (int ix = min_x; ix <= max_x; ++ix) {
        const double dx = out.center_x(ix) - obstacle.x;
        const double dy = out.center_y(iy) - obstacle.y;
        if (dx * dx + dy * dy <= r * r) out.at(ix, iy) = 1;
      }
    }
  }
  return out;
}

/// Plain-text grid file, version 1:
///   line 1: "gridv1 <width> <height> <resolution> <origin_x> <origin_y>"
///   then `height` rows of `width` chars, '#' occupied / '.' free,
///   top row first (highest y).
inline GridMap load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file: " + path);
  std::string magic;
  int width = 0, height = 0;
  double resolution = 0.0, ox = 0.0, oy = 0.0;
  in >> magic >> width >> height >> resolution >> ox >> oy;
  if (magic != "gridv1") throw IoError("bad grid header (want gridv1): " + path);
  if (!in) throw IoError("bad grid header values: " + path);
  GridMap map = GridMap::make(width, height, resolution, ox, oy);
  std::string line;
  std::getline(in, line);  // rest of header line
  for (int row = 0; row < height; ++row) {
    if (!std::getline(in, line) || static_cast<int>(line.size()) < width)
      throw IoError("grid row " + std::to_string(row) + " truncated: " + path);
    const int iy = height - 1 - row;
    for (int ix = 0; ix < width; ++ix) {
      const char c = line[ix];
      if (c != '#' && c != '.') throw IoError("bad grid char in " + path);
      map.at(ix, iy) = (c == '#') ? 1 : 0;
    }
  }
  return map;
}

inline void save_grid(const GridMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write grid file: " + path);
  out << "gridv1 " << map.width << ' ' << map.height << ' ' << map.resolution << ' '
      << map.origin_x << ' ' << map.origin_y << '\n';
  for (int row = 0; row < map.height; ++row) {
    const int iy = map.height - 1 - row;
    for (int ix = 0; ix < map.width; ++ix) out << (map.at(ix, iy) ? '#' : '.');
    out << '\n';
  }
}

}  // namespace svgmppi
