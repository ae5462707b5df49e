#include "taskgrid/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "taskgrid/detail/json_util.hpp"
#include "taskgrid/rng.hpp"

namespace taskgrid {

using detail::as_array;
using detail::as_bool;
using detail::as_int;
using detail::as_number;
using detail::as_string;
using detail::get_int;
using detail::get_string;
using detail::join_path;
using detail::optional_field;
using detail::require;

namespace {

constexpr Capability kAllCapabilities[] = {
    Capability::Pickupable, Capability::Openable, Capability::Toggleable,
    Capability::Breakable, Capability::Receptacle};

std::optional<Capability> parse_capability(std::string_view s) {
  for (auto c : kAllCapabilities)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

Cell cell_from_json(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2)
    throw ParseError(path, "expected [x, z] pair");
  return Cell{static_cast<int>(as_int(v[0], path + "[0]")),
              static_cast<int>(as_int(v[1], path + "[1]"))};
}

Json cell_to_json(Cell c) { return Json::array({c.x, c.z}); }

}  // namespace

std::string to_string(Cell c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.z) + ")";
}

std::string_view to_string(SceneCategory c) {
  switch (c) {
    case SceneCategory::LivingRoom: return "LivingRoom";
    case SceneCategory::Bedroom: return "Bedroom";
    case SceneCategory::Bathroom: return "Bathroom";
    case SceneCategory::Kitchen: return "Kitchen";
  }
  return "?";
}

std::optional<SceneCategory> parse_category(std::string_view s) {
  for (auto c : {SceneCategory::LivingRoom, SceneCategory::Bedroom,
                 SceneCategory::Bathroom, SceneCategory::Kitchen})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::Pickupable: return "Pickupable";
    case Capability::Openable: return "Openable";
    case Capability::Toggleable: return "Toggleable";
    case Capability::Breakable: return "Breakable";
    case Capability::Receptacle: return "Receptacle";
  }
  return "?";
}

std::string_view to_string(ViolationRule r) {
  switch (r) {
    case ViolationRule::BadDimensions: return "BadDimensions";
    case ViolationRule::BadCellSize: return "BadCellSize";
    case ViolationRule::ObjectOutOfBounds: return "ObjectOutOfBounds";
    case ViolationRule::AgentOutOfBounds: return "AgentOutOfBounds";
    case ViolationRule::AgentOnWall: return "AgentOnWall";
    case ViolationRule::AgentOnBlocked: return "AgentOnBlocked";
    case ViolationRule::BadHeading: return "BadHeading";
    case ViolationRule::BadPitch: return "BadPitch";
    case ViolationRule::WallOutOfBounds: return "WallOutOfBounds";
    case ViolationRule::DuplicateId: return "DuplicateId";
    case ViolationRule::EmptyId: return "EmptyId";
    case ViolationRule::CellCollision: return "CellCollision";
    case ViolationRule::ObjectOnWall: return "ObjectOnWall";
    case ViolationRule::DanglingParent: return "DanglingParent";
    case ViolationRule::ParentNotReceptacle: return "ParentNotReceptacle";
    case ViolationRule::ParentPickupable: return "ParentPickupable";
    case ViolationRule::ParentCellMismatch: return "ParentCellMismatch";
    case ViolationRule::ParentCycle: return "ParentCycle";
    case ViolationRule::StateCapabilityMismatch:
      return "StateCapabilityMismatch";
    case ViolationRule::NegativeHeight: return "NegativeHeight";
  }
  return "?";
}

namespace {

std::string describe(const std::vector<Violation>& vs) {
  std::ostringstream os;
  os << vs.size() << " scene violation(s)";
  for (const auto& v : vs) {
    os << "; " << to_string(v.rule);
    if (!v.entities.empty()) {
      os << "(";
      for (std::size_t i = 0; i < v.entities.size(); ++i)
        os << (i ? "," : "") << v.entities[i];
      os << ")";
    }
  }
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(describe(violations)), violations_(std::move(violations)) {}

const ObjectInstance* Scene::find(std::string_view object_id) const {
  for (const auto& o : objects)
    if (o.id == object_id) return &o;
  return nullptr;
}

std::optional<std::size_t> Scene::index_of(std::string_view object_id) const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].id == object_id) return i;
  return std::nullopt;
}

std::vector<Violation> validate_scene(const Scene& scene) {
  std::vector<Violation> out;
  auto add = [&](ViolationRule r, std::vector<std::string> ents,
                 std::string msg) {
    out.push_back({r, std::move(ents), std::move(msg)});
  };

  if (scene.width < 2 || scene.depth < 2)
    add(ViolationRule::BadDimensions, {scene.id},
        "scene must be at least 2x2 cells");
  if (scene.cell_size_mm <= 0)
    add(ViolationRule::BadCellSize, {scene.id}, "cell size must be positive");

  for (Cell w : scene.walls)
    if (!scene.in_bounds(w))
      add(ViolationRule::WallOutOfBounds, {to_string(w)},
          "wall cell outside the grid");

  std::map<std::string, int> id_count;
  for (const auto& o : scene.objects) {
    if (o.id.empty())
      add(ViolationRule::EmptyId, {}, "object with empty id");
    else if (++id_count[o.id] == 2)
      add(ViolationRule::DuplicateId, {o.id}, "object id used more than once");
  }

  for (const auto& o : scene.objects) {
    if (!scene.in_bounds(o.cell))
      add(ViolationRule::ObjectOutOfBounds, {o.id},
          "object cell " + to_string(o.cell) + " outside the grid");
    else if (scene.walls.contains(o.cell))
      add(ViolationRule::ObjectOnWall, {o.id},
          "object on wall cell " + to_string(o.cell));
    if (o.height_mm < 0)
      add(ViolationRule::NegativeHeight, {o.id}, "negative height");

    const auto& caps = o.capabilities;
    if ((o.state.is_open && !caps.has(Capability::Openable)) ||
        (o.state.is_on && !caps.has(Capability::Toggleable)) ||
        (o.state.is_broken && !caps.has(Capability::Breakable)))
      add(ViolationRule::StateCapabilityMismatch, {o.id},
          "state field without matching capability");

    if (o.parent) {
      const ObjectInstance* p = scene.find(*o.parent);
      if (!p) {
        add(ViolationRule::DanglingParent, {o.id, *o.parent},
            "parent receptacle does not exist");
        continue;
      }
      if (!p->capabilities.has(Capability::Receptacle))
        add(ViolationRule::ParentNotReceptacle, {o.id, p->id},
            "parent lacks Receptacle capability");
      if (p->pickupable())
        add(ViolationRule::ParentPickupable, {o.id, p->id},
            "parent receptacle is pickupable");
      if (p->cell != o.cell)
        add(ViolationRule::ParentCellMismatch, {o.id, p->id},
            "object and parent on different cells");
    }
  }

  // Parent chains must terminate.
  for (const auto& o : scene.objects) {
    const ObjectInstance* cur = &o;
    std::size_t hops = 0;
    while (cur && cur->parent && hops <= scene.objects.size()) {
      cur = scene.find(*cur->parent);
      ++hops;
    }
    if (hops > scene.objects.size())
      add(ViolationRule::ParentCycle, {o.id}, "parent chain forms a cycle");
  }

  std::map<Cell, std::vector<std::string>> floor;
  for (const auto& o : scene.objects)
    if (!o.parent) floor[o.cell].push_back(o.id);
  for (const auto& [cell, ids] : floor)
    if (ids.size() > 1)
      add(ViolationRule::CellCollision, ids,
          "several floor objects on cell " + to_string(cell));

  const AgentPose& a = scene.agent_start;
  if (!scene.in_bounds(a.cell)) {
    add(ViolationRule::AgentOutOfBounds, {"agent"},
        "agent start outside the grid");
  } else if (scene.walls.contains(a.cell)) {
    add(ViolationRule::AgentOnWall, {"agent"}, "agent start on a wall cell");
  } else {
    for (const auto& o : scene.objects)
      if (!o.parent && !o.pickupable() && o.cell == a.cell)
        add(ViolationRule::AgentOnBlocked, {"agent", o.id},
            "agent start on a blocking object");
  }
  if (a.heading != 0 && a.heading != 90 && a.heading != 180 &&
      a.heading != 270)
    add(ViolationRule::BadHeading, {"agent"},
        "heading must be 0, 90, 180 or 270");
  if (a.pitch != -30 && a.pitch != 0 && a.pitch != 30)
    add(ViolationRule::BadPitch, {"agent"}, "pitch must be -30, 0 or 30");
  return out;
}

Scene scene_from_json(const Json& doc) {
  detail::check_version(doc, "scene_version", 1);
  Scene s;
  s.id = get_string(doc, "id");
  auto cat = get_string(doc, "category");
  auto parsed = parse_category(cat);
  if (!parsed) throw ParseError("category", "unknown category '" + cat + "'");
  s.category = *parsed;
  s.width = static_cast<int>(get_int(doc, "width"));
  s.depth = static_cast<int>(get_int(doc, "depth"));
  if (const Json* cs = optional_field(doc, "cell_size"))
    s.cell_size_mm =
        static_cast<int>(std::llround(as_number(*cs, "cell_size") * 1000.0));

  if (const Json* walls = optional_field(doc, "walls")) {
    as_array(*walls, "walls");
    for (std::size_t i = 0; i < walls->size(); ++i)
      s.walls.insert(
          cell_from_json((*walls)[i], "walls[" + std::to_string(i) + "]"));
  }

  const Json& objs = as_array(require(doc, "objects"), "objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string path = "objects[" + std::to_string(i) + "]";
    const Json& jo = objs[i];
    ObjectInstance o;
    o.id = get_string(jo, "id", path);
    o.object_class = get_string(jo, "class", path);
    o.cell = cell_from_json(require(jo, "cell", path), join_path(path, "cell"));
    o.height_mm = static_cast<int>(std::llround(
        as_number(require(jo, "height", path), join_path(path, "height")) *
        1000.0));
    if (const Json* caps = optional_field(jo, "capabilities")) {
      const auto cpath = join_path(path, "capabilities");
      as_array(*caps, cpath);
      for (const auto& c : *caps) {
        auto name = as_string(c, cpath);
        auto cap = parse_capability(name);
        if (!cap) throw ParseError(cpath, "unknown capability '" + name + "'");
        o.capabilities.add(*cap);
      }
    }
    if (const Json* st = optional_field(jo, "state")) {
      const auto spath = join_path(path, "state");
      if (!st->is_object()) throw ParseError(spath, "expected object");
      for (const auto& [key, value] : st->items()) {
        bool b = as_bool(value, join_path(spath, key));
        if (key == "is_open") o.state.is_open = b;
        else if (key == "is_on") o.state.is_on = b;
        else if (key == "is_broken") o.state.is_broken = b;
        else throw ParseError(join_path(spath, key), "unknown state field");
      }
    }
    // Capable objects always carry their state field.
    if (o.capabilities.has(Capability::Openable) && !o.state.is_open)
      o.state.is_open = false;
    if (o.capabilities.has(Capability::Toggleable) && !o.state.is_on)
      o.state.is_on = false;
    if (o.capabilities.has(Capability::Breakable) && !o.state.is_broken)
      o.state.is_broken = false;
    if (const Json* p = optional_field(jo, "parent_receptacle"))
      o.parent = as_string(*p, join_path(path, "parent_receptacle"));
    s.objects.push_back(std::move(o));
  }

  const Json& ja = require(doc, "agent_start");
  s.agent_start.cell =
      cell_from_json(require(ja, "cell", "agent_start"), "agent_start.cell");
  s.agent_start.heading =
      static_cast<int>(get_int(ja, "heading", "agent_start"));
  if (const Json* p = optional_field(ja, "pitch"))
    s.agent_start.pitch = static_cast<int>(as_int(*p, "agent_start.pitch"));
  return s;
}

Json scene_to_json(const Scene& s) {
  Json doc;
  doc["scene_version"] = 1;
  doc["id"] = s.id;
  doc["category"] = std::string(to_string(s.category));
  doc["width"] = s.width;
  doc["depth"] = s.depth;
  doc["cell_size"] = s.cell_size_mm / 1000.0;
  Json walls = Json::array();
  for (Cell w : s.walls) walls.push_back(cell_to_json(w));
  doc["walls"] = std::move(walls);
  Json objs = Json::array();
  for (const auto& o : s.objects) {
    Json jo;
    jo["id"] = o.id;
    jo["class"] = o.object_class;
    jo["cell"] = cell_to_json(o.cell);
    jo["height"] = o.height_mm / 1000.0;
    Json caps = Json::array();
    for (auto c : kAllCapabilities)
      if (o.capabilities.has(c)) caps.push_back(std::string(to_string(c)));
    jo["capabilities"] = std::move(caps);
    Json st = Json::object();
    if (o.state.is_open) st["is_open"] = *o.state.is_open;
    if (o.state.is_on) st["is_on"] = *o.state.is_on;
    if (o.state.is_broken) st["is_broken"] = *o.state.is_broken;
    jo["state"] = std::move(st);
    if (o.parent) jo["parent_receptacle"] = *o.parent;
    objs.push_back(std::move(jo));
  }
  doc["objects"] = std::move(objs);
  doc["agent_start"] = {{"cell", cell_to_json(s.agent_start.cell)},
                        {"heading", s.agent_start.heading},
                        {"pitch", s.agent_start.pitch}};
  return doc;
}

Scene load_scene(std::string_view document) {
  Scene s = scene_from_json(detail::parse_json(document, "scene"));
  auto violations = validate_scene(s);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return s;
}

Scene load_scene_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scene file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scene(ss.str());
}

std::string serialize_scene(const Scene& scene) {
  return scene_to_json(scene).dump(2) + "\n";
}

std::size_t OccupancyGrid::count(Occupancy v) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), v));
}

OccupancyGrid occupancy_grid(const Scene& scene) {
  OccupancyGrid grid(scene.width, scene.depth);
  for (Cell w : scene.walls)
    if (grid.in_bounds(w)) grid.set(w, Occupancy::Blocked);
  for (const auto& o : scene.objects)
    if (!o.parent && !o.pickupable() && grid.in_bounds(o.cell))
      grid.set(o.cell, Occupancy::Blocked);
  return grid;
}

Scene randomize_placements(const Scene& scene, std::uint64_t seed) {
  Scene out = scene;
  const OccupancyGrid grid = occupancy_grid(scene);

  std::vector<std::size_t> surfaces;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& caps = scene.objects[i].capabilities;
    if (caps.has(Capability::Receptacle) &&
        !caps.has(Capability::Pickupable) &&
        !caps.has(Capability::Openable) && !caps.has(Capability::Toggleable))
      surfaces.push_back(i);
  }
  std::vector<Cell> floor_cells;
  for (int x = 0; x < scene.width; ++x)
    for (int z = 0; z < scene.depth; ++z) {
      Cell c{x, z};
      if (grid.at(c) == Occupancy::Free && c != scene.agent_start.cell)
        floor_cells.push_back(c);
    }

  // Floor cells held by objects that stay put.
  std::set<Cell> taken;
  for (const auto& o : scene.objects)
    if (!o.pickupable() && !o.parent) taken.insert(o.cell);

  const std::size_t candidates = surfaces.size() + floor_cells.size();
  std::mt19937_64 rng(seed);
  for (auto& o : out.objects) {
    if (!o.pickupable()) continue;
    if (candidates == 0) throw PlacementInfeasible(o.id);
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const std::size_t pick = uniform_below(rng, candidates);
      if (pick < surfaces.size()) {
        const auto& surface = scene.objects[surfaces[pick]];
        o.parent = surface.id;
        o.cell = surface.cell;
        placed = true;
      } else {
        Cell c = floor_cells[pick - surfaces.size()];
        if (taken.contains(c)) continue;
        taken.insert(c);
        o.parent.reset();
        o.cell = c;
        placed = true;
      }
    }
    if (!placed) throw PlacementInfeasible(o.id);
  }
  return out;
}

}  // namespace taskgrid
