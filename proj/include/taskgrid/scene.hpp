#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taskgrid/errors.hpp"

namespace taskgrid {

using Json = nlohmann::json;

/// Grid cell coordinates. `x` runs east, `z` runs north.
struct Cell {
  int x = 0;
  int z = 0;
  auto operator<=>(const Cell&) const = default;
};

std::string to_string(Cell c);

enum class SceneCategory { LivingRoom, Bedroom, Bathroom, Kitchen };

std::string_view to_string(SceneCategory c);
std::optional<SceneCategory> parse_category(std::string_view s);

enum class Capability : std::uint8_t {
  Pickupable = 1 << 0,
  Openable = 1 << 1,
  Toggleable = 1 << 2,
  Breakable = 1 << 3,
  Receptacle = 1 << 4,
};

class CapabilitySet {
 public:
  constexpr CapabilitySet() = default;
  constexpr CapabilitySet(std::initializer_list<Capability> caps) {
    for (auto c : caps) bits_ |= static_cast<std::uint8_t>(c);
  }
  constexpr bool has(Capability c) const {
    return (bits_ & static_cast<std::uint8_t>(c)) != 0;
  }
  constexpr void add(Capability c) { bits_ |= static_cast<std::uint8_t>(c); }
  constexpr std::uint8_t bits() const { return bits_; }
  bool operator==(const CapabilitySet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

std::string_view to_string(Capability c);

/// Dynamic object state. A field is present only when the object has the
/// matching capability.
struct ObjectState {
  std::optional<bool> is_open;
  std::optional<bool> is_on;
  std::optional<bool> is_broken;
  bool operator==(const ObjectState&) const = default;
};

struct ObjectInstance {
  std::string id;
  std::string object_class;
  Cell cell;
  /// Top of the object's box above its support, in millimetres. For a
  /// receptacle this is the surface its contents rest on.
  int height_mm = 0;
  CapabilitySet capabilities;
  ObjectState state;
  std::optional<std::string> parent;

  bool pickupable() const { return capabilities.has(Capability::Pickupable); }
  bool operator==(const ObjectInstance&) const = default;
};

struct AgentPose {
  Cell cell;
  int heading = 0;  ///< degrees, one of 0 (+z), 90 (+x), 180, 270
  int pitch = 0;    ///< degrees, one of -30, 0, 30 (positive looks up)
  auto operator<=>(const AgentPose&) const = default;
};

inline constexpr int kDefaultCellSizeMm = 250;

/// A room on a regular grid. Immutable after loading; object order is the
/// canonical iteration order everywhere in the library.
struct Scene {
  std::string id;
  SceneCategory category = SceneCategory::Kitchen;
  int width = 0;
  int depth = 0;
  int cell_size_mm = kDefaultCellSizeMm;
  std::set<Cell> walls;
  std::vector<ObjectInstance> objects;
  AgentPose agent_start;

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.z >= 0 && c.x < width && c.z < depth;
  }
  const ObjectInstance* find(std::string_view object_id) const;
  std::optional<std::size_t> index_of(std::string_view object_id) const;
  bool operator==(const Scene&) const = default;
};

enum class ViolationRule {
  BadDimensions,
  BadCellSize,
  ObjectOutOfBounds,
  AgentOutOfBounds,
  AgentOnWall,
  AgentOnBlocked,
  BadHeading,
  BadPitch,
  WallOutOfBounds,
  DuplicateId,
  EmptyId,
  CellCollision,
  ObjectOnWall,
  DanglingParent,
  ParentNotReceptacle,
  ParentPickupable,
  ParentCellMismatch,
  ParentCycle,
  StateCapabilityMismatch,
  NegativeHeight,
};

std::string_view to_string(ViolationRule r);

struct Violation {
  ViolationRule rule;
  std::vector<std::string> entities;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class PlacementInfeasible : public Error {
 public:
  explicit PlacementInfeasible(std::string object_id)
      : Error("no legal placement for object '" + object_id + "'"),
        object_id_(std::move(object_id)) {}
  const std::string& object_id() const { return object_id_; }

 private:
  std::string object_id_;
};

std::vector<Violation> validate_scene(const Scene& scene);

Scene scene_from_json(const Json& doc);
Json scene_to_json(const Scene& scene);

/// Parses and validates a `.scene.json` document. Throws ParseError or
/// ValidationError (carrying every violation).
Scene load_scene(std::string_view document);
Scene load_scene_file(const std::string& path);
std::string serialize_scene(const Scene& scene);

enum class Occupancy : std::uint8_t { Free, Blocked };

/// Row-major occupancy raster, index = z * width + x.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int depth, Occupancy fill = Occupancy::Free)
      : width_(width), depth_(depth), cells_(width * depth, fill) {}

  int width() const { return width_; }
  int depth() const { return depth_; }
  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.z >= 0 && c.x < width_ && c.z < depth_;
  }
  Occupancy at(Cell c) const { return cells_[c.z * width_ + c.x]; }
  void set(Cell c, Occupancy v) { cells_[c.z * width_ + c.x] = v; }
  bool free(Cell c) const { return in_bounds(c) && at(c) == Occupancy::Free; }
  std::size_t count(Occupancy v) const;
  bool operator==(const OccupancyGrid&) const = default;

 private:
  int width_ = 0;
  int depth_ = 0;
  std::vector<Occupancy> cells_;
};

/// A cell is Blocked iff it is a wall or holds a floor-standing
/// non-pickupable object.
OccupancyGrid occupancy_grid(const Scene& scene);

/// Re-places every pickupable object on a plain-surface receptacle or a free
/// floor cell, drawn uniformly from a generator seeded with `seed`.
Scene randomize_placements(const Scene& scene, std::uint64_t seed);

inline constexpr int kPlacementAttempts = 100;

}  // namespace taskgrid
