#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "taskgrid/scene.hpp"

namespace taskgrid {

enum class ActionKind {
  MoveAhead,
  MoveBack,
  RotateLeft,
  RotateRight,
  LookUp,
  LookDown,
  PickupObject,
  PutObject,
  OpenObject,
  CloseObject,
  ToggleOn,
  ToggleOff,
  DropHandObject,
};

inline constexpr ActionKind kAllActionKinds[] = {
    ActionKind::MoveAhead,    ActionKind::MoveBack,    ActionKind::RotateLeft,
    ActionKind::RotateRight,  ActionKind::LookUp,      ActionKind::LookDown,
    ActionKind::PickupObject, ActionKind::PutObject,   ActionKind::OpenObject,
    ActionKind::CloseObject,  ActionKind::ToggleOn,    ActionKind::ToggleOff,
    ActionKind::DropHandObject};

std::string_view to_string(ActionKind k);
std::optional<ActionKind> parse_action_kind(std::string_view s);

enum class TargetRule { None, Optional, Required };
enum class HandRule { Any, Empty, Full };
enum class StateField { IsOpen, IsOn, IsBroken };

std::string_view to_string(StateField f);
std::optional<StateField> parse_state_field(std::string_view s);

/// One row of the action-semantics table. `step` interprets these rows; the
/// table is also published as docs/action_semantics.json.
struct ActionSpec {
  ActionKind kind;
  TargetRule target;
  std::optional<Capability> target_capability;
  HandRule hand;
  /// For state-changing interactions: the field flipped and its required
  /// value before the action.
  std::optional<StateField> flips;
  bool flips_from = false;
  std::string_view preconditions;
  std::string_view effects;
};

const ActionSpec& action_spec(ActionKind k);
Json action_semantics_document();

/// Third-tier action. `target` is required for Pickup/Open/Close/Toggle*,
/// optional for PutObject and absent otherwise.
struct AtomicAction {
  ActionKind kind = ActionKind::MoveAhead;
  std::optional<std::string> target;

  bool is_interaction() const;
  bool well_formed() const;
  std::string label() const;
  bool operator==(const AtomicAction&) const = default;
};

AtomicAction make_action(ActionKind kind,
                         std::optional<std::string> target = std::nullopt);

Json action_to_json(const AtomicAction& a);
AtomicAction action_from_json(const Json& j, const std::string& path = "action");

using Trace = std::vector<AtomicAction>;

Json trace_to_json(std::span<const AtomicAction> trace);
Trace trace_from_json(const Json& j);
std::string serialize_trace(std::span<const AtomicAction> trace);
Trace load_trace(std::string_view document);
Trace load_trace_file(const std::string& path);

enum class FailReason {
  BlockedMove,
  OutOfRange,
  NotVisible,
  HandsFull,
  HandsEmpty,
  WrongCapability,
  WrongState,
  UnknownObject,
};

std::string_view to_string(FailReason r);
std::optional<FailReason> parse_fail_reason(std::string_view s);

struct Effect {
  std::string object_id;
  std::string field;
  std::string value;
  bool operator==(const Effect&) const = default;
};

struct Event {
  int tick = 0;  ///< env tick the action was attempted at
  AtomicAction action;
  std::optional<FailReason> failure;
  std::vector<Effect> effects;

  bool ok() const { return !failure.has_value(); }
  bool operator==(const Event&) const = default;
};

/// Where an object currently is. Exactly one of: floor cell (no parent),
/// inside/on a receptacle (parent set, cell = parent's cell), or in hand
/// (no cell).
struct ObjectDynamics {
  std::optional<Cell> cell;
  std::optional<std::string> parent;
  ObjectState state;

  bool in_hand() const { return !cell.has_value(); }
  bool operator==(const ObjectDynamics&) const = default;
};

inline constexpr int kInteractionRange = 2;

struct EnvState {
  std::shared_ptr<const Scene> scene;
  std::shared_ptr<const OccupancyGrid> grid;
  AgentPose agent;
  std::optional<std::string> held;
  /// Indexed like scene->objects.
  std::vector<ObjectDynamics> objects;
  int tick = 0;
  std::vector<Event> events;

  const ObjectDynamics* dynamics(std::string_view object_id) const;
  const ObjectInstance* instance(std::string_view object_id) const;
};

/// Unit step along a heading: 0 -> +z, 90 -> +x, 180 -> -z, 270 -> -x.
Cell heading_step(int heading);
inline Cell operator+(Cell a, Cell b) { return {a.x + b.x, a.z + b.z}; }
inline Cell operator-(Cell a, Cell b) { return {a.x - b.x, a.z - b.z}; }

EnvState init_env(std::shared_ptr<const Scene> scene);
EnvState init_env(const Scene& scene);

/// Applies `action` in place and returns the appended event. Failures leave
/// everything but the event log untouched.
const Event& apply_action(EnvState& env, const AtomicAction& action);
EnvState step(const EnvState& env, const AtomicAction& action);

/// Interaction preconditions that depend only on geometry: the target's
/// cell lies 1..kInteractionRange cells ahead and nothing blocks the line.
std::optional<FailReason> reach_check(const EnvState& env, Cell target);

/// Height of the surface an object rests on, following live parent links
/// (0 for floor objects and held objects).
int support_height_mm(const EnvState& env, std::size_t object_index);

/// True when an object cannot be seen: held, or inside a closed receptacle.
bool concealed(const EnvState& env, std::size_t object_index);

std::string state_hash(const EnvState& env);
std::string canonical_state(const EnvState& env);

struct ReplayResult {
  EnvState state;
  std::string digest;
};

ReplayResult replay(const Scene& scene, std::span<const AtomicAction> actions);

// --- goals -----------------------------------------------------------------

/// Names either one object (by id) or any object of a class.
struct ObjectRef {
  bool by_class = true;
  std::string name;
  bool operator==(const ObjectRef&) const = default;
};

struct ObjectInState {
  ObjectRef ref;
  StateField field;
  bool value;
  bool operator==(const ObjectInState&) const = default;
};

struct ObjectIn {
  ObjectRef ref;
  std::string receptacle_class;
  bool operator==(const ObjectIn&) const = default;
};

/// Empty `object_class` means "holds nothing".
struct AgentHolds {
  std::optional<std::string> object_class;
  bool operator==(const AgentHolds&) const = default;
};

using GoalPredicate = std::variant<ObjectInState, ObjectIn, AgentHolds>;

struct GoalSpec {
  std::vector<GoalPredicate> predicates;
  bool operator==(const GoalSpec&) const = default;
};

std::string describe(const GoalPredicate& p);
Json goal_to_json(const GoalSpec& g);
GoalSpec goal_from_json(const Json& j, const std::string& path = "goal_spec");

struct PredicateResult {
  std::string predicate;
  bool holds = false;
};

struct GoalReport {
  bool satisfied = false;
  std::vector<PredicateResult> predicates;
};

class UnknownObjectClass : public Error {
 public:
  explicit UnknownObjectClass(const std::string& name)
      : Error("goal references '" + name + "', absent from the scene") {}
};

GoalReport check_goal(const EnvState& env, const GoalSpec& goal);

}  // namespace taskgrid
