#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's algorithms: distances come from repeated relaxation, bearings
// from floating-point atan2.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "taskgrid/scene.hpp"

namespace oracle {

inline constexpr int kInf = std::numeric_limits<int>::max() / 2;

struct Grid {
  int width = 0;
  int depth = 0;
  std::vector<bool> blocked;  // z * width + x

  bool free(int x, int z) const {
    return x >= 0 && z >= 0 && x < width && z < depth && !blocked[z * width + x];
  }
};

inline Grid random_grid(std::mt19937_64& rng, int max_side, double max_density) {
  Grid g;
  g.width = 1 + static_cast<int>(rng() % max_side);
  g.depth = 1 + static_cast<int>(rng() % max_side);
  const double density =
      std::uniform_real_distribution<double>(0.0, max_density)(rng);
  std::bernoulli_distribution wall(density);
  g.blocked.resize(static_cast<std::size_t>(g.width) * g.depth);
  for (std::size_t i = 0; i < g.blocked.size(); ++i) g.blocked[i] = wall(rng);
  return g;
}

inline taskgrid::OccupancyGrid to_occupancy(const Grid& g) {
  taskgrid::OccupancyGrid out(g.width, g.depth);
  for (int z = 0; z < g.depth; ++z)
    for (int x = 0; x < g.width; ++x)
      if (g.blocked[z * g.width + x])
        out.set({x, z}, taskgrid::Occupancy::Blocked);
  return out;
}

/// Bellman-Ford style relaxation until a fixed point; kInf = unreachable.
inline std::vector<int> relaxed_distances(const Grid& g, int sx, int sz) {
  std::vector<int> d(g.blocked.size(), kInf);
  if (!g.free(sx, sz)) return d;
  d[sz * g.width + sx] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int z = 0; z < g.depth; ++z) {
      for (int x = 0; x < g.width; ++x) {
        if (!g.free(x, z)) continue;
        int& here = d[z * g.width + x];
        const int nb[4][2] = {{x + 1, z}, {x - 1, z}, {x, z + 1}, {x, z - 1}};
        for (const auto& n : nb) {
          if (!g.free(n[0], n[1])) continue;
          const int via = d[n[1] * g.width + n[0]];
          if (via != kInf && via + 1 < here) {
            here = via + 1;
            changed = true;
          }
        }
      }
    }
  }
  return d;
}

/// Compass bearing in degrees from `from` to `to`: 0 = +z, 90 = +x.
inline double bearing_deg(taskgrid::Cell from, taskgrid::Cell to) {
  const double deg = std::atan2(static_cast<double>(to.x - from.x),
                                static_cast<double>(to.z - from.z)) *
                     180.0 / 3.14159265358979323846;
  return deg < 0 ? deg + 360.0 : deg;
}

inline double wrapped_diff_deg(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace oracle
