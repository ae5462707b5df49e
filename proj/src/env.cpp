#include "taskgrid/env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "taskgrid/detail/json_util.hpp"
#include "taskgrid/digest.hpp"

namespace taskgrid {

using detail::as_array;
using detail::as_bool;
using detail::as_string;
using detail::get_string;
using detail::join_path;
using detail::optional_field;
using detail::require;

namespace {

// clang-format off
constexpr ActionSpec kActionTable[] = {
  {ActionKind::MoveAhead, TargetRule::None, std::nullopt, HandRule::Any, std::nullopt, false,
   "facing cell in bounds and Free",
   "agent cell += facing step"},
  {ActionKind::MoveBack, TargetRule::None, std::nullopt, HandRule::Any, std::nullopt, false,
   "cell behind the agent in bounds and Free",
   "agent cell -= facing step"},
  {ActionKind::RotateLeft, TargetRule::None, std::nullopt, HandRule::Any, std::nullopt, false,
   "none",
   "heading -= 90 (mod 360)"},
  {ActionKind::RotateRight, TargetRule::None, std::nullopt, HandRule::Any, std::nullopt, false,
   "none",
   "heading += 90 (mod 360)"},
  {ActionKind::LookUp, TargetRule::None, std::nullopt, HandRule::Any, std::nullopt, false,
   "pitch < 30 (else WrongState)",
   "pitch += 30"},
  {ActionKind::LookDown, TargetRule::None, std::nullopt, HandRule::Any, std::nullopt, false,
   "pitch > -30 (else WrongState)",
   "pitch -= 30"},
  {ActionKind::PickupObject, TargetRule::Required, Capability::Pickupable, HandRule::Empty, std::nullopt, false,
   "target in reach and visible; target not inside a closed receptacle",
   "target moves to hand; held = target"},
  {ActionKind::PutObject, TargetRule::Optional, Capability::Receptacle, HandRule::Full, std::nullopt, false,
   "with target: non-pickupable receptacle in reach and visible, open if Openable; "
   "without target: facing cell in bounds, Free and without a floor object",
   "held object placed in target (cell = target cell) or on the facing floor cell; held = none"},
  {ActionKind::OpenObject, TargetRule::Required, Capability::Openable, HandRule::Any, StateField::IsOpen, false,
   "target in reach and visible; is_open = false",
   "is_open = true"},
  {ActionKind::CloseObject, TargetRule::Required, Capability::Openable, HandRule::Any, StateField::IsOpen, true,
   "target in reach and visible; is_open = true",
   "is_open = false"},
  {ActionKind::ToggleOn, TargetRule::Required, Capability::Toggleable, HandRule::Any, StateField::IsOn, false,
   "target in reach and visible; is_on = false",
   "is_on = true"},
  {ActionKind::ToggleOff, TargetRule::Required, Capability::Toggleable, HandRule::Any, StateField::IsOn, true,
   "target in reach and visible; is_on = true",
   "is_on = false"},
  {ActionKind::DropHandObject, TargetRule::None, std::nullopt, HandRule::Full, std::nullopt, false,
   "facing cell in bounds, Free and without a floor object",
   "held object placed on the facing floor cell; Breakable objects get is_broken = true"},
};
// clang-format on

std::optional<bool>& field_ref(ObjectState& s, StateField f) {
  switch (f) {
    case StateField::IsOpen: return s.is_open;
    case StateField::IsOn: return s.is_on;
    case StateField::IsBroken: return s.is_broken;
  }
  return s.is_open;
}

std::optional<bool> field_value(const ObjectState& s, StateField f) {
  switch (f) {
    case StateField::IsOpen: return s.is_open;
    case StateField::IsOn: return s.is_on;
    case StateField::IsBroken: return s.is_broken;
  }
  return std::nullopt;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::MoveAhead: return "MoveAhead";
    case ActionKind::MoveBack: return "MoveBack";
    case ActionKind::RotateLeft: return "RotateLeft";
    case ActionKind::RotateRight: return "RotateRight";
    case ActionKind::LookUp: return "LookUp";
    case ActionKind::LookDown: return "LookDown";
    case ActionKind::PickupObject: return "PickupObject";
    case ActionKind::PutObject: return "PutObject";
    case ActionKind::OpenObject: return "OpenObject";
    case ActionKind::CloseObject: return "CloseObject";
    case ActionKind::ToggleOn: return "ToggleOn";
    case ActionKind::ToggleOff: return "ToggleOff";
    case ActionKind::DropHandObject: return "DropHandObject";
  }
  return "?";
}

std::optional<ActionKind> parse_action_kind(std::string_view s) {
  for (auto k : kAllActionKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string_view to_string(StateField f) {
  switch (f) {
    case StateField::IsOpen: return "is_open";
    case StateField::IsOn: return "is_on";
    case StateField::IsBroken: return "is_broken";
  }
  return "?";
}

std::optional<StateField> parse_state_field(std::string_view s) {
  for (auto f : {StateField::IsOpen, StateField::IsOn, StateField::IsBroken})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

std::string_view to_string(FailReason r) {
  switch (r) {
    case FailReason::BlockedMove: return "BlockedMove";
    case FailReason::OutOfRange: return "OutOfRange";
    case FailReason::NotVisible: return "NotVisible";
    case FailReason::HandsFull: return "HandsFull";
    case FailReason::HandsEmpty: return "HandsEmpty";
    case FailReason::WrongCapability: return "WrongCapability";
    case FailReason::WrongState: return "WrongState";
    case FailReason::UnknownObject: return "UnknownObject";
  }
  return "?";
}

std::optional<FailReason> parse_fail_reason(std::string_view s) {
  for (auto r : {FailReason::BlockedMove, FailReason::OutOfRange,
                 FailReason::NotVisible, FailReason::HandsFull,
                 FailReason::HandsEmpty, FailReason::WrongCapability,
                 FailReason::WrongState, FailReason::UnknownObject})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

const ActionSpec& action_spec(ActionKind k) {
  return kActionTable[static_cast<std::size_t>(k)];
}

Json action_semantics_document() {
  auto rule_text = [](TargetRule r) {
    switch (r) {
      case TargetRule::None: return "none";
      case TargetRule::Optional: return "optional";
      case TargetRule::Required: return "required";
    }
    return "?";
  };
  auto hand_text = [](HandRule r) {
    switch (r) {
      case HandRule::Any: return "any";
      case HandRule::Empty: return "empty";
      case HandRule::Full: return "full";
    }
    return "?";
  };
  Json rows = Json::array();
  for (const auto& spec : kActionTable) {
    Json row;
    row["action"] = std::string(to_string(spec.kind));
    row["target"] = rule_text(spec.target);
    row["target_capability"] =
        spec.target_capability
            ? Json(std::string(to_string(*spec.target_capability)))
            : Json(nullptr);
    row["hand"] = hand_text(spec.hand);
    row["preconditions"] = std::string(spec.preconditions);
    row["effects"] = std::string(spec.effects);
    rows.push_back(std::move(row));
  }
  return {{"action_semantics_version", 1},
          {"interaction_range_cells", kInteractionRange},
          {"failed_actions", "state unchanged, tick unchanged, Failed event appended"},
          {"check_order",
           {"UnknownObject", "WrongCapability", "HandsFull/HandsEmpty",
            "WrongState (target in hand)", "OutOfRange", "NotVisible",
            "WrongState (object state)"}},
          {"actions", std::move(rows)}};
}

bool AtomicAction::is_interaction() const {
  return action_spec(kind).target != TargetRule::None ||
         kind == ActionKind::DropHandObject;
}

bool AtomicAction::well_formed() const {
  switch (action_spec(kind).target) {
    case TargetRule::None: return !target.has_value();
    case TargetRule::Optional: return !target || !target->empty();
    case TargetRule::Required: return target.has_value() && !target->empty();
  }
  return false;
}

std::string AtomicAction::label() const {
  std::string s(to_string(kind));
  if (target) s += "(" + *target + ")";
  return s;
}

AtomicAction make_action(ActionKind kind, std::optional<std::string> target) {
  AtomicAction a{kind, std::move(target)};
  if (!a.well_formed())
    throw std::invalid_argument("malformed action " + a.label());
  return a;
}

Json action_to_json(const AtomicAction& a) {
  Json j;
  j["kind"] = std::string(to_string(a.kind));
  if (a.target) j["target"] = *a.target;
  return j;
}

AtomicAction action_from_json(const Json& j, const std::string& path) {
  auto name = get_string(j, "kind", path);
  auto kind = parse_action_kind(name);
  if (!kind)
    throw ParseError(join_path(path, "kind"), "unknown action '" + name + "'");
  AtomicAction a{*kind, std::nullopt};
  if (const Json* t = optional_field(j, "target"))
    a.target = as_string(*t, join_path(path, "target"));
  if (!a.well_formed())
    throw ParseError(join_path(path, "target"),
                     "target not allowed or missing for " + name);
  return a;
}

Json trace_to_json(std::span<const AtomicAction> trace) {
  Json arr = Json::array();
  for (const auto& a : trace) arr.push_back(action_to_json(a));
  return arr;
}

Trace trace_from_json(const Json& j) {
  as_array(j, "trace");
  Trace out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(action_from_json(j[i], "trace[" + std::to_string(i) + "]"));
  return out;
}

std::string serialize_trace(std::span<const AtomicAction> trace) {
  return trace_to_json(trace).dump(2) + "\n";
}

Trace load_trace(std::string_view document) {
  return trace_from_json(detail::parse_json(document, "trace"));
}

Trace load_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_trace(ss.str());
}

Cell heading_step(int heading) {
  switch (((heading % 360) + 360) % 360) {
    case 0: return {0, 1};
    case 90: return {1, 0};
    case 180: return {0, -1};
    case 270: return {-1, 0};
  }
  return {0, 0};
}

const ObjectDynamics* EnvState::dynamics(std::string_view object_id) const {
  auto idx = scene->index_of(object_id);
  return idx ? &objects[*idx] : nullptr;
}

const ObjectInstance* EnvState::instance(std::string_view object_id) const {
  return scene->find(object_id);
}

EnvState init_env(std::shared_ptr<const Scene> scene) {
  EnvState env;
  env.grid = std::make_shared<const OccupancyGrid>(occupancy_grid(*scene));
  env.agent = scene->agent_start;
  env.objects.reserve(scene->objects.size());
  for (const auto& o : scene->objects)
    env.objects.push_back({o.cell, o.parent, o.state});
  env.scene = std::move(scene);
  return env;
}

EnvState init_env(const Scene& scene) {
  return init_env(std::make_shared<const Scene>(scene));
}

std::optional<FailReason> reach_check(const EnvState& env, Cell target) {
  const Cell dir = heading_step(env.agent.heading);
  Cell c = env.agent.cell;
  bool occluded = false;
  for (int k = 1; k <= kInteractionRange; ++k) {
    c = c + dir;
    if (c == target)
      return occluded ? std::optional(FailReason::NotVisible) : std::nullopt;
    if (!env.grid->free(c)) occluded = true;
  }
  return FailReason::OutOfRange;
}

namespace {

bool floor_cell_open(const EnvState& env, Cell c) {
  if (!env.grid->free(c)) return false;
  for (const auto& d : env.objects)
    if (d.cell && !d.parent && *d.cell == c) return false;
  return true;
}

struct Outcome {
  std::optional<FailReason> failure;
  std::vector<Effect> effects;
};

Outcome fail(FailReason r) { return {r, {}}; }

Outcome apply_motion(EnvState& env, const AtomicAction& a) {
  AgentPose& p = env.agent;
  switch (a.kind) {
    case ActionKind::MoveAhead:
    case ActionKind::MoveBack: {
      Cell d = heading_step(p.heading);
      Cell next = a.kind == ActionKind::MoveAhead ? p.cell + d : p.cell - d;
      if (!env.grid->free(next)) return fail(FailReason::BlockedMove);
      p.cell = next;
      return {std::nullopt, {{"agent", "cell", to_string(next)}}};
    }
    case ActionKind::RotateLeft:
      p.heading = (p.heading + 270) % 360;
      return {std::nullopt, {{"agent", "heading", std::to_string(p.heading)}}};
    case ActionKind::RotateRight:
      p.heading = (p.heading + 90) % 360;
      return {std::nullopt, {{"agent", "heading", std::to_string(p.heading)}}};
    case ActionKind::LookUp:
      if (p.pitch >= 30) return fail(FailReason::WrongState);
      p.pitch += 30;
      return {std::nullopt, {{"agent", "pitch", std::to_string(p.pitch)}}};
    case ActionKind::LookDown:
      if (p.pitch <= -30) return fail(FailReason::WrongState);
      p.pitch -= 30;
      return {std::nullopt, {{"agent", "pitch", std::to_string(p.pitch)}}};
    default:
      break;
  }
  return fail(FailReason::WrongCapability);
}

Outcome place_on_floor(EnvState& env, bool breaks) {
  const Cell facing = env.agent.cell + heading_step(env.agent.heading);
  if (!floor_cell_open(env, facing)) return fail(FailReason::BlockedMove);
  const std::string id = *env.held;
  const auto idx = *env.scene->index_of(id);
  ObjectDynamics& d = env.objects[idx];
  d.cell = facing;
  d.parent.reset();
  env.held.reset();
  std::vector<Effect> fx{{id, "location", "cell:" + to_string(facing)}};
  if (breaks && env.scene->objects[idx].capabilities.has(Capability::Breakable) &&
      d.state.is_broken != true) {
    d.state.is_broken = true;
    fx.push_back({id, "is_broken", "true"});
  }
  return {std::nullopt, std::move(fx)};
}

Outcome apply_interaction(EnvState& env, const AtomicAction& a) {
  const ActionSpec& spec = action_spec(a.kind);

  if (a.kind == ActionKind::DropHandObject) {
    if (!env.held) return fail(FailReason::HandsEmpty);
    return place_on_floor(env, /*breaks=*/true);
  }
  if (a.kind == ActionKind::PutObject && !a.target) {
    if (!env.held) return fail(FailReason::HandsEmpty);
    return place_on_floor(env, /*breaks=*/false);
  }

  if (!a.target) return fail(FailReason::UnknownObject);
  const auto idx = env.scene->index_of(*a.target);
  if (!idx) return fail(FailReason::UnknownObject);
  const ObjectInstance& inst = env.scene->objects[*idx];

  if (spec.target_capability && !inst.capabilities.has(*spec.target_capability))
    return fail(FailReason::WrongCapability);
  if (a.kind == ActionKind::PutObject && inst.pickupable())
    return fail(FailReason::WrongCapability);

  if (spec.hand == HandRule::Empty && env.held) return fail(FailReason::HandsFull);
  if (spec.hand == HandRule::Full && !env.held) return fail(FailReason::HandsEmpty);

  ObjectDynamics& target = env.objects[*idx];
  if (target.in_hand()) return fail(FailReason::WrongState);
  if (auto r = reach_check(env, *target.cell)) return fail(*r);

  switch (a.kind) {
    case ActionKind::PickupObject: {
      if (target.parent) {
        const auto& parent = *env.dynamics(*target.parent);
        if (parent.state.is_open == false) return fail(FailReason::WrongState);
      }
      target.cell.reset();
      target.parent.reset();
      env.held = inst.id;
      return {std::nullopt, {{inst.id, "location", "hand"}}};
    }
    case ActionKind::PutObject: {
      if (target.state.is_open == false) return fail(FailReason::WrongState);
      const std::string held_id = *env.held;
      ObjectDynamics& h = env.objects[*env.scene->index_of(held_id)];
      h.cell = target.cell;
      h.parent = inst.id;
      env.held.reset();
      return {std::nullopt, {{held_id, "location", "in:" + inst.id}}};
    }
    default: {
      auto& field = field_ref(target.state, *spec.flips);
      if (field.value_or(false) != spec.flips_from)
        return fail(FailReason::WrongState);
      field = !spec.flips_from;
      return {std::nullopt,
              {{inst.id, std::string(to_string(*spec.flips)),
                bool_text(!spec.flips_from)}}};
    }
  }
}

}  // namespace

const Event& apply_action(EnvState& env, const AtomicAction& action) {
  Outcome out = action.is_interaction() ? apply_interaction(env, action)
                                        : apply_motion(env, action);
  Event ev{env.tick, action, out.failure, std::move(out.effects)};
  if (ev.ok()) ++env.tick;
  env.events.push_back(std::move(ev));
  return env.events.back();
}

EnvState step(const EnvState& env, const AtomicAction& action) {
  EnvState next = env;
  apply_action(next, action);
  return next;
}

int support_height_mm(const EnvState& env, std::size_t object_index) {
  int total = 0;
  const std::optional<std::string>* parent = &env.objects[object_index].parent;
  for (std::size_t hops = 0; *parent && hops <= env.objects.size(); ++hops) {
    const auto p = *env.scene->index_of(**parent);
    total += env.scene->objects[p].height_mm;
    parent = &env.objects[p].parent;
  }
  return total;
}

bool concealed(const EnvState& env, std::size_t object_index) {
  const auto& d = env.objects[object_index];
  if (d.in_hand()) return true;
  const std::optional<std::string>* parent = &d.parent;
  for (std::size_t hops = 0; *parent && hops <= env.objects.size(); ++hops) {
    const auto p = *env.scene->index_of(**parent);
    if (env.objects[p].state.is_open == false) return true;
    parent = &env.objects[p].parent;
  }
  return false;
}

std::string canonical_state(const EnvState& env) {
  Json doc;
  doc["scene"] = env.scene->id;
  doc["agent"] = {{"cell", {env.agent.cell.x, env.agent.cell.z}},
                  {"heading", env.agent.heading},
                  {"pitch", env.agent.pitch}};
  doc["held"] = env.held ? Json(*env.held) : Json(nullptr);
  std::vector<std::size_t> order(env.objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return env.scene->objects[a].id < env.scene->objects[b].id;
  });
  Json objs = Json::array();
  for (auto i : order) {
    const auto& d = env.objects[i];
    Json st = Json::object();
    if (d.state.is_open) st["is_open"] = *d.state.is_open;
    if (d.state.is_on) st["is_on"] = *d.state.is_on;
    if (d.state.is_broken) st["is_broken"] = *d.state.is_broken;
    objs.push_back({{"id", env.scene->objects[i].id},
                    {"cell", d.cell ? Json::array({d.cell->x, d.cell->z})
                                    : Json(nullptr)},
                    {"parent", d.parent ? Json(*d.parent) : Json(nullptr)},
                    {"state", std::move(st)}});
  }
  doc["objects"] = std::move(objs);
  doc["tick"] = env.tick;
  return doc.dump();
}

std::string state_hash(const EnvState& env) {
  return sha256_hex(canonical_state(env));
}

ReplayResult replay(const Scene& scene, std::span<const AtomicAction> actions) {
  EnvState env = init_env(scene);
  for (const auto& a : actions) apply_action(env, a);
  std::string digest = state_hash(env);
  return {std::move(env), std::move(digest)};
}

// --- goals -----------------------------------------------------------------

namespace {

std::string ref_text(const ObjectRef& r) {
  return (r.by_class ? "class " : "object ") + r.name;
}

Json ref_to_json(const ObjectRef& r, Json& into) {
  into[r.by_class ? "class" : "object"] = r.name;
  return into;
}

ObjectRef ref_from_json(const Json& j, const std::string& path) {
  const Json* cls = optional_field(j, "class");
  const Json* obj = optional_field(j, "object");
  if ((cls == nullptr) == (obj == nullptr))
    throw ParseError(path, "exactly one of 'class' or 'object' required");
  if (cls) return {true, as_string(*cls, join_path(path, "class"))};
  return {false, as_string(*obj, join_path(path, "object"))};
}

/// Indices of live scene objects the reference names. Throws when the
/// reference cannot match anything in this scene.
std::vector<std::size_t> resolve(const EnvState& env, const ObjectRef& r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < env.scene->objects.size(); ++i) {
    const auto& o = env.scene->objects[i];
    if (r.by_class ? o.object_class == r.name : o.id == r.name)
      out.push_back(i);
  }
  if (out.empty()) throw UnknownObjectClass(r.name);
  return out;
}

bool scene_has_class(const Scene& s, const std::string& cls) {
  return std::any_of(s.objects.begin(), s.objects.end(),
                     [&](const auto& o) { return o.object_class == cls; });
}

}  // namespace

std::string describe(const GoalPredicate& p) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ObjectInState>) {
          return "ObjectInState(" + ref_text(v.ref) + ", " +
                 std::string(to_string(v.field)) + ", " + bool_text(v.value) +
                 ")";
        } else if constexpr (std::is_same_v<T, ObjectIn>) {
          return "ObjectIn(" + ref_text(v.ref) + ", " + v.receptacle_class +
                 ")";
        } else {
          return "AgentHolds(" + v.object_class.value_or("nothing") + ")";
        }
      },
      p);
}

Json goal_to_json(const GoalSpec& g) {
  Json preds = Json::array();
  for (const auto& p : g.predicates) {
    Json j;
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, ObjectInState>) {
            j["type"] = "ObjectInState";
            ref_to_json(v.ref, j);
            j["field"] = std::string(to_string(v.field));
            j["value"] = v.value;
          } else if constexpr (std::is_same_v<T, ObjectIn>) {
            j["type"] = "ObjectIn";
            ref_to_json(v.ref, j);
            j["receptacle_class"] = v.receptacle_class;
          } else {
            j["type"] = "AgentHolds";
            j["class"] = v.object_class ? Json(*v.object_class) : Json(nullptr);
          }
        },
        p);
    preds.push_back(std::move(j));
  }
  return {{"predicates", std::move(preds)}};
}

GoalSpec goal_from_json(const Json& j, const std::string& path) {
  const auto ppath = join_path(path, "predicates");
  const Json& arr = as_array(require(j, "predicates", path), ppath);
  if (arr.empty()) throw ParseError(ppath, "at least one predicate required");
  GoalSpec g;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto p = ppath + "[" + std::to_string(i) + "]";
    const Json& jp = arr[i];
    auto type = get_string(jp, "type", p);
    if (type == "ObjectInState") {
      auto fname = get_string(jp, "field", p);
      auto field = parse_state_field(fname);
      if (!field) throw ParseError(join_path(p, "field"), "unknown field");
      g.predicates.push_back(ObjectInState{
          ref_from_json(jp, p), *field,
          as_bool(require(jp, "value", p), join_path(p, "value"))});
    } else if (type == "ObjectIn") {
      g.predicates.push_back(ObjectIn{
          ref_from_json(jp, p), get_string(jp, "receptacle_class", p)});
    } else if (type == "AgentHolds") {
      AgentHolds h;
      if (const Json* c = optional_field(jp, "class"))
        h.object_class = as_string(*c, join_path(p, "class"));
      g.predicates.push_back(h);
    } else {
      throw ParseError(join_path(p, "type"), "unknown predicate '" + type + "'");
    }
  }
  return g;
}

GoalReport check_goal(const EnvState& env, const GoalSpec& goal) {
  if (goal.predicates.empty())
    throw std::invalid_argument("goal needs at least one predicate");
  GoalReport report;
  report.satisfied = true;
  for (const auto& p : goal.predicates) {
    bool holds = std::visit(
        [&](const auto& v) -> bool {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, ObjectInState>) {
            for (auto i : resolve(env, v.ref))
              if (field_value(env.objects[i].state, v.field) == v.value)
                return true;
            return false;
          } else if constexpr (std::is_same_v<T, ObjectIn>) {
            if (!scene_has_class(*env.scene, v.receptacle_class))
              throw UnknownObjectClass(v.receptacle_class);
            for (auto i : resolve(env, v.ref)) {
              const auto& d = env.objects[i];
              if (!d.parent) continue;
              if (env.instance(*d.parent)->object_class == v.receptacle_class)
                return true;
            }
            return false;
          } else {
            if (!v.object_class) return !env.held.has_value();
            if (!scene_has_class(*env.scene, *v.object_class))
              throw UnknownObjectClass(*v.object_class);
            return env.held &&
                   env.instance(*env.held)->object_class == *v.object_class;
          }
        },
        p);
    report.predicates.push_back({describe(p), holds});
    report.satisfied = report.satisfied && holds;
  }
  return report;
}

}  // namespace taskgrid
