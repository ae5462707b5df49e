#pragma once

#include <optional>
#include <span>
#include <vector>

#include "taskgrid/env.hpp"

namespace taskgrid {

class StartBlocked : public Error {
 public:
  explicit StartBlocked(Cell c) : Error("start cell " + to_string(c) + " is blocked") {}
};

class Unreachable : public Error {
 public:
  Unreachable() : Error("no goal cell is reachable") {}
};

class NonAdjacentPath : public Error {
 public:
  NonAdjacentPath(Cell a, Cell b)
      : Error("path cells " + to_string(a) + " and " + to_string(b) +
              " are not 4-adjacent") {}
};

/// BFS expansion order: N (+z), E (+x), S (-z), W (-x).
inline constexpr Cell kNeighbourOrder[] = {{0, 1}, {1, 0}, {0, -1}, {-1, 0}};

/// Exact BFS distances over 4-connected Free cells from one origin.
class DistanceMap {
 public:
  DistanceMap(Cell origin, int width, int depth);

  Cell origin() const { return origin_; }
  int width() const { return width_; }
  int depth() const { return depth_; }
  std::optional<int> at(Cell c) const;
  bool contains(Cell c) const { return at(c).has_value(); }
  std::size_t size() const { return mapped_; }
  void set(Cell c, int d);

 private:
  Cell origin_;
  int width_;
  int depth_;
  std::vector<int> dist_;
  std::size_t mapped_ = 0;
};

DistanceMap bfs_reachability(const OccupancyGrid& grid, Cell start);

/// Cells after `start` along a minimal path to the nearest reachable goal
/// (ties: smallest goal cell; parents follow N,E,S,W expansion). Empty iff
/// start is a goal. Throws Unreachable or StartBlocked.
std::vector<Cell> shortest_path(const OccupancyGrid& grid, Cell start,
                                std::span<const Cell> goals);

/// Rotations and MoveAheads walking `path`, whose first cell is the agent's
/// cell. A 180 degree turn is two RotateRight.
std::vector<AtomicAction> path_to_actions(std::span<const Cell> path,
                                          int start_heading);

/// Heading after executing `path_to_actions(path, start_heading)`.
int heading_after_path(std::span<const Cell> path, int start_heading);

/// Turn (and pitch) actions that point the agent at an object: the world
/// displacement to the object is rotated into the agent frame and snapped
/// to the nearest axis; pitch follows the vertical slope to `focus_height_mm`.
std::vector<AtomicAction> refocus(const AgentPose& agent, Cell object_cell,
                                  int focus_height_mm,
                                  int cell_size_mm = kDefaultCellSizeMm);

/// Heading chosen by refocus (no pitch).
int refocus_heading(const AgentPose& agent, Cell object_cell);
int refocus_pitch(Cell agent_cell, Cell object_cell, int focus_height_mm,
                  int cell_size_mm);

}  // namespace taskgrid
