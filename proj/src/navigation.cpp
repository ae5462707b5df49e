#include "taskgrid/navigation.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>

#include "taskgrid/detail/tan_table.hpp"
#include "taskgrid/render.hpp"

namespace taskgrid {

DistanceMap::DistanceMap(Cell origin, int width, int depth)
    : origin_(origin), width_(width), depth_(depth),
      dist_(static_cast<std::size_t>(width) * depth, -1) {}

std::optional<int> DistanceMap::at(Cell c) const {
  if (c.x < 0 || c.z < 0 || c.x >= width_ || c.z >= depth_) return std::nullopt;
  int d = dist_[static_cast<std::size_t>(c.z) * width_ + c.x];
  if (d < 0) return std::nullopt;
  return d;
}

void DistanceMap::set(Cell c, int d) {
  int& slot = dist_[static_cast<std::size_t>(c.z) * width_ + c.x];
  if (slot < 0) ++mapped_;
  slot = d;
}

DistanceMap bfs_reachability(const OccupancyGrid& grid, Cell start) {
  if (!grid.free(start)) throw StartBlocked(start);
  DistanceMap map(start, grid.width(), grid.depth());
  std::deque<Cell> queue{start};
  map.set(start, 0);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int d = *map.at(c);
    for (Cell step : kNeighbourOrder) {
      const Cell n = c + step;
      if (!grid.free(n) || map.contains(n)) continue;
      map.set(n, d + 1);
      queue.push_back(n);
    }
  }
  return map;
}

std::vector<Cell> shortest_path(const OccupancyGrid& grid, Cell start,
                                std::span<const Cell> goals) {
  if (goals.empty()) throw std::invalid_argument("goal set is empty");
  if (!grid.free(start)) throw StartBlocked(start);
  if (std::find(goals.begin(), goals.end(), start) != goals.end()) return {};

  const auto W = static_cast<std::size_t>(grid.width());
  auto index = [&](Cell c) { return static_cast<std::size_t>(c.z) * W + c.x; };
  std::vector<int> dist(W * grid.depth(), -1);
  std::vector<Cell> parent(W * grid.depth());
  std::deque<Cell> queue{start};
  dist[index(start)] = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (Cell step : kNeighbourOrder) {
      const Cell n = c + step;
      if (!grid.free(n) || dist[index(n)] >= 0) continue;
      dist[index(n)] = dist[index(c)] + 1;
      parent[index(n)] = c;
      queue.push_back(n);
    }
  }

  std::optional<Cell> best;
  for (Cell g : goals) {
    if (!grid.in_bounds(g) || dist[index(g)] < 0) continue;
    if (!best || dist[index(g)] < dist[index(*best)] ||
        (dist[index(g)] == dist[index(*best)] && g < *best))
      best = g;
  }
  if (!best) throw Unreachable();

  std::vector<Cell> path;
  for (Cell c = *best; c != start; c = parent[index(c)]) path.push_back(c);
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

int heading_of(Cell from, Cell to) {
  const Cell d = to - from;
  if (d == Cell{0, 1}) return 0;
  if (d == Cell{1, 0}) return 90;
  if (d == Cell{0, -1}) return 180;
  if (d == Cell{-1, 0}) return 270;
  throw NonAdjacentPath(from, to);
}

void append_turn(std::vector<AtomicAction>& out, int from, int to) {
  switch (((to - from) % 360 + 360) % 360) {
    case 90: out.push_back({ActionKind::RotateRight, {}}); break;
    case 180:
      out.push_back({ActionKind::RotateRight, {}});
      out.push_back({ActionKind::RotateRight, {}});
      break;
    case 270: out.push_back({ActionKind::RotateLeft, {}}); break;
    default: break;
  }
}

}  // namespace

std::vector<AtomicAction> path_to_actions(std::span<const Cell> path,
                                          int start_heading) {
  std::vector<AtomicAction> out;
  int heading = start_heading;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const int want = heading_of(path[i - 1], path[i]);
    append_turn(out, heading, want);
    heading = want;
    out.push_back({ActionKind::MoveAhead, {}});
  }
  return out;
}

int heading_after_path(std::span<const Cell> path, int start_heading) {
  if (path.size() < 2) return start_heading;
  return heading_of(path[path.size() - 2], path.back());
}

int refocus_heading(const AgentPose& agent, Cell object_cell) {
  const Cell d = object_cell - agent.cell;
  // Displacement in the agent frame: forward and rightward components.
  int fwd = 0, right = 0;
  switch (agent.heading) {
    case 0: fwd = d.z; right = d.x; break;
    case 90: fwd = d.x; right = -d.z; break;
    case 180: fwd = -d.z; right = -d.x; break;
    default: fwd = -d.x; right = d.z; break;
  }
  const int af = std::abs(fwd), ar = std::abs(right);
  int turn = 0;
  if (af > ar) {
    turn = fwd > 0 ? 0 : 180;
  } else if (ar > af) {
    turn = right > 0 ? 90 : 270;
  } else if (af != 0) {
    // Exact diagonal: both neighbouring axes are 45 degrees off; keep the
    // one needing fewer rotations.
    turn = fwd > 0 ? 0 : (right > 0 ? 90 : 270);
  }
  return (agent.heading + turn) % 360;
}

int refocus_pitch(Cell agent_cell, Cell object_cell, int focus_height_mm,
                  int cell_size_mm) {
  const Cell d = object_cell - agent_cell;
  const __int128 horiz_sq = static_cast<__int128>(cell_size_mm) * cell_size_mm *
                            (static_cast<__int128>(d.x) * d.x +
                             static_cast<__int128>(d.z) * d.z);
  const __int128 dy = focus_height_mm - kEyeHeightMm;
  // Snap to +-30 once the slope exceeds tan(15 degrees).
  const __int128 t15 = detail::tan_q30(30);
  const bool steep = dy * dy * (static_cast<__int128>(1) << 60) > t15 * t15 * horiz_sq;
  if (!steep) return 0;
  return dy > 0 ? 30 : -30;
}

std::vector<AtomicAction> refocus(const AgentPose& agent, Cell object_cell,
                                  int focus_height_mm, int cell_size_mm) {
  std::vector<AtomicAction> out;
  append_turn(out, agent.heading, refocus_heading(agent, object_cell));
  const int pitch =
      refocus_pitch(agent.cell, object_cell, focus_height_mm, cell_size_mm);
  for (int p = agent.pitch; p < pitch; p += 30)
    out.push_back({ActionKind::LookUp, {}});
  for (int p = agent.pitch; p > pitch; p -= 30)
    out.push_back({ActionKind::LookDown, {}});
  return out;
}

}  // namespace taskgrid
