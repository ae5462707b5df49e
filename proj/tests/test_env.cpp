#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "support.hpp"
#include "taskgrid/env.hpp"
#include "taskgrid/task_record.hpp"

using namespace taskgrid;
using testsupport::bundled_scene;

namespace {

AtomicAction act(ActionKind k, std::optional<std::string> t = std::nullopt) {
  return make_action(k, std::move(t));
}

/// Small open room: agent (1,1) facing +z, Egg and Mug on the floor ahead,
/// a Cabinet and a toggleable Lamp.
Scene play_room() {
  Scene s;
  s.id = "play";
  s.width = 5;
  s.depth = 5;
  s.walls = {{4, 4}};
  auto add = [&](std::string id, std::string cls, Cell c,
                 std::initializer_list<Capability> caps, int h,
                 std::optional<std::string> parent = std::nullopt) {
    ObjectInstance o;
    o.id = std::move(id);
    o.object_class = std::move(cls);
    o.cell = c;
    o.capabilities = CapabilitySet(caps);
    o.height_mm = h;
    o.parent = std::move(parent);
    if (o.capabilities.has(Capability::Openable)) o.state.is_open = false;
    if (o.capabilities.has(Capability::Toggleable)) o.state.is_on = false;
    if (o.capabilities.has(Capability::Breakable)) o.state.is_broken = false;
    s.objects.push_back(o);
  };
  add("Egg_1", "Egg", {1, 2}, {Capability::Pickupable, Capability::Breakable}, 60);
  add("Mug_1", "Mug", {1, 4}, {Capability::Pickupable}, 100);
  add("Cabinet_1", "Cabinet", {3, 1}, {Capability::Receptacle, Capability::Openable}, 900);
  add("Spoon_1", "Spoon", {3, 1}, {Capability::Pickupable}, 20, "Cabinet_1");
  add("Lamp_1", "Lamp", {0, 3}, {Capability::Toggleable}, 500);
  add("Table_1", "Table", {3, 3}, {Capability::Receptacle}, 750);
  s.agent_start = {{1, 1}, 0, 0};
  REQUIRE(validate_scene(s).empty());
  return s;
}

/// Canonical state without the event log.
std::string core_of(const EnvState& env) { return canonical_state(env); }

std::size_t ok_events(const EnvState& env) {
  std::size_t n = 0;
  for (const auto& e : env.events) n += e.ok();
  return n;
}

}  // namespace

TEST_CASE("init_env") {
  const Scene s = bundled_scene("kitchen_01");
  const EnvState a = init_env(s);
  CHECK(a.tick == 0);
  CHECK(a.events.empty());
  CHECK(!a.held);
  CHECK(a.agent == s.agent_start);
  const EnvState b = init_env(s);
  CHECK(canonical_state(a) == canonical_state(b));
  CHECK(a.objects == b.objects);

  Scene t = play_room();
  CHECK(init_env(t).agent == AgentPose{{1, 1}, 0, 0});
}

TEST_CASE("dropping a held egg cracks it") {
  EnvState env = init_env(play_room());
  REQUIRE(apply_action(env, act(ActionKind::PickupObject, "Egg_1")).ok());
  CHECK(env.held == std::optional<std::string>("Egg_1"));
  const Event& ev = apply_action(env, act(ActionKind::DropHandObject));
  REQUIRE(ev.ok());
  const auto* egg = env.dynamics("Egg_1");
  CHECK(egg->cell == std::optional<Cell>(Cell{1, 2}));
  CHECK(egg->state.is_broken == std::optional<bool>(true));
  CHECK(!env.held);

  const GoalSpec g{{ObjectInState{{true, "Egg"}, StateField::IsBroken, true}}};
  CHECK(check_goal(env, g).satisfied);
}

TEST_CASE("moving into a wall fails and leaves the pose") {
  EnvState env = init_env(play_room());
  env.agent = {{3, 4}, 90, 0};  // (4,4) is a wall
  const auto before = core_of(env);
  const Event& ev = apply_action(env, act(ActionKind::MoveAhead));
  CHECK(ev.failure == std::optional(FailReason::BlockedMove));
  CHECK(ev.effects.empty());
  CHECK(core_of(env) == before);
  CHECK(env.tick == 0);
  // Grid edge behaves the same.
  env.agent = {{0, 0}, 180, 0};
  CHECK(apply_action(env, act(ActionKind::MoveAhead)).failure ==
        std::optional(FailReason::BlockedMove));
}

TEST_CASE("pickup at range 1 removes the mug from the grid") {
  EnvState env = init_env(play_room());
  env.agent = {{1, 3}, 0, 0};
  const Event& ev = apply_action(env, act(ActionKind::PickupObject, "Mug_1"));
  REQUIRE(ev.ok());
  CHECK(env.held == std::optional<std::string>("Mug_1"));
  CHECK(env.dynamics("Mug_1")->in_hand());
  CHECK(ev.effects == std::vector<Effect>{{"Mug_1", "location", "hand"}});
}

TEST_CASE("reach and visibility agree with a cell-walk oracle") {
  // Every agent pose against every object in a room with scattered blockers.
  Scene s = play_room();
  s.walls.insert({2, 2});
  s.walls.insert({0, 1});
  REQUIRE(validate_scene(s).empty());
  const EnvState base = init_env(s);
  const OccupancyGrid grid = occupancy_grid(s);
  int checked = 0;
  for (int x = 0; x < s.width; ++x) {
    for (int z = 0; z < s.depth; ++z) {
      if (!grid.free({x, z})) continue;
      for (int h = 0; h < 360; h += 90) {
        for (const auto& obj : s.objects) {
          EnvState env = base;
          env.agent = {{x, z}, h, 0};
          const Cell t = obj.cell;
          // Oracle: walk up to two cells along the heading.
          int dx = 0, dz = 0;
          if (h == 0) dz = 1;
          if (h == 90) dx = 1;
          if (h == 180) dz = -1;
          if (h == 270) dx = -1;
          std::optional<FailReason> expect = FailReason::OutOfRange;
          bool clear = true;
          for (int k = 1; k <= 2; ++k) {
            const Cell c{x + k * dx, z + k * dz};
            if (c == t) {
              expect = clear ? std::nullopt : std::optional(FailReason::NotVisible);
              break;
            }
            const bool blocked = !(c.x >= 0 && c.z >= 0 && c.x < s.width &&
                                   c.z < s.depth) ||
                                 grid.at(c) == Occupancy::Blocked;
            if (blocked) clear = false;
          }
          CHECK(reach_check(env, t) == expect);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("interaction failure reasons") {
  EnvState env = init_env(play_room());
  SUBCASE("unknown object") {
    CHECK(apply_action(env, act(ActionKind::PickupObject, "Ghost")).failure ==
          std::optional(FailReason::UnknownObject));
  }
  SUBCASE("wrong capability") {
    env.agent = {{0, 1}, 0, 0};
    CHECK(apply_action(env, act(ActionKind::PickupObject, "Lamp_1")).failure ==
          std::optional(FailReason::WrongCapability));
    CHECK(apply_action(env, act(ActionKind::OpenObject, "Lamp_1")).failure ==
          std::optional(FailReason::WrongCapability));
  }
  SUBCASE("hands full and empty") {
    CHECK(apply_action(env, act(ActionKind::DropHandObject)).failure ==
          std::optional(FailReason::HandsEmpty));
    CHECK(apply_action(env, act(ActionKind::PutObject)).failure ==
          std::optional(FailReason::HandsEmpty));
    REQUIRE(apply_action(env, act(ActionKind::PickupObject, "Egg_1")).ok());
    CHECK(apply_action(env, act(ActionKind::PickupObject, "Mug_1")).failure ==
          std::optional(FailReason::HandsFull));
  }
  SUBCASE("out of range and not visible") {
    CHECK(apply_action(env, act(ActionKind::PickupObject, "Mug_1")).failure ==
          std::optional(FailReason::OutOfRange));
    env.agent = {{1, 3}, 90, 0};
    CHECK(apply_action(env, act(ActionKind::ToggleOn, "Lamp_1")).failure ==
          std::optional(FailReason::OutOfRange));
  }
  SUBCASE("not visible behind a blocking object") {
    Scene s = play_room();
    s.walls.insert({1, 2});
    s.objects.erase(s.objects.begin());  // drop the egg that sat on (1,2)
    EnvState e2 = init_env(s);
    // Mug is at (1,4): three ahead, out of range even with a clear line.
    e2.agent = {{1, 1}, 0, 0};
    CHECK(apply_action(e2, act(ActionKind::PickupObject, "Mug_1")).failure ==
          std::optional(FailReason::OutOfRange));
    e2.agent = {{1, 3}, 180, 0};
    // Facing -z from (1,3): (1,2) is a wall, (1,1) two ahead.
    CHECK(reach_check(e2, {1, 1}) == std::optional(FailReason::NotVisible));
  }
  SUBCASE("state preconditions") {
    env.agent = {{1, 2}, 270, 0};
    CHECK(apply_action(env, act(ActionKind::ToggleOff, "Lamp_1")).failure ==
          std::optional(FailReason::OutOfRange));
    env.agent = {{0, 2}, 0, 0};
    CHECK(apply_action(env, act(ActionKind::ToggleOff, "Lamp_1")).failure ==
          std::optional(FailReason::WrongState));
    CHECK(apply_action(env, act(ActionKind::ToggleOn, "Lamp_1")).ok());
    CHECK(apply_action(env, act(ActionKind::ToggleOn, "Lamp_1")).failure ==
          std::optional(FailReason::WrongState));
    CHECK(env.dynamics("Lamp_1")->state.is_on == std::optional(true));
  }
  SUBCASE("pitch limits") {
    CHECK(apply_action(env, act(ActionKind::LookUp)).ok());
    CHECK(apply_action(env, act(ActionKind::LookUp)).failure ==
          std::optional(FailReason::WrongState));
    CHECK(apply_action(env, act(ActionKind::LookDown)).ok());
    CHECK(apply_action(env, act(ActionKind::LookDown)).ok());
    CHECK(apply_action(env, act(ActionKind::LookDown)).failure ==
          std::optional(FailReason::WrongState));
    CHECK(env.agent.pitch == -30);
  }
}

TEST_CASE("closed receptacles hide and refuse their contents") {
  EnvState env = init_env(play_room());
  env.agent = {{2, 1}, 90, 0};  // facing the cabinet at (3,1)
  CHECK(apply_action(env, act(ActionKind::PickupObject, "Spoon_1")).failure ==
        std::optional(FailReason::WrongState));
  CHECK(concealed(env, *env.scene->index_of("Spoon_1")));
  REQUIRE(apply_action(env, act(ActionKind::OpenObject, "Cabinet_1")).ok());
  CHECK(!concealed(env, *env.scene->index_of("Spoon_1")));
  REQUIRE(apply_action(env, act(ActionKind::PickupObject, "Spoon_1")).ok());
  REQUIRE(apply_action(env, act(ActionKind::CloseObject, "Cabinet_1")).ok());
  CHECK(apply_action(env, act(ActionKind::PutObject, "Cabinet_1")).failure ==
        std::optional(FailReason::WrongState));
  REQUIRE(apply_action(env, act(ActionKind::OpenObject, "Cabinet_1")).ok());
  REQUIRE(apply_action(env, act(ActionKind::PutObject, "Cabinet_1")).ok());
  CHECK(env.dynamics("Spoon_1")->parent == std::optional<std::string>("Cabinet_1"));
  CHECK(support_height_mm(env, *env.scene->index_of("Spoon_1")) == 900);
}

TEST_CASE("put without target and drop need an open floor cell") {
  EnvState env = init_env(play_room());
  REQUIRE(apply_action(env, act(ActionKind::PickupObject, "Egg_1")).ok());
  env.agent = {{2, 1}, 90, 0};  // facing the cabinet
  CHECK(apply_action(env, act(ActionKind::PutObject)).failure ==
        std::optional(FailReason::BlockedMove));
  env.agent = {{1, 3}, 0, 0};  // facing the mug lying on (1,4)
  CHECK(apply_action(env, act(ActionKind::DropHandObject)).failure ==
        std::optional(FailReason::BlockedMove));
  env.agent = {{1, 3}, 90, 0};
  REQUIRE(apply_action(env, act(ActionKind::PutObject)).ok());
  CHECK(env.dynamics("Egg_1")->state.is_broken == std::optional(false));
  CHECK(env.dynamics("Egg_1")->cell == std::optional<Cell>(Cell{2, 3}));
}

TEST_CASE("put onto a pickupable object is a capability error") {
  EnvState env = init_env(play_room());
  REQUIRE(apply_action(env, act(ActionKind::PickupObject, "Egg_1")).ok());
  env.agent = {{1, 3}, 0, 0};
  CHECK(apply_action(env, act(ActionKind::PutObject, "Mug_1")).failure ==
        std::optional(FailReason::WrongCapability));
}

TEST_CASE("pickup then put back onto the prior support restores the object") {
  const Scene s = bundled_scene("kitchen_01");
  EnvState env = init_env(s);
  env.agent = {{1, 2}, 270, 0};
  const ObjectDynamics before = *env.dynamics("Mug_1");
  REQUIRE(apply_action(env, act(ActionKind::PickupObject, "Mug_1")).ok());
  REQUIRE(apply_action(env, act(ActionKind::PutObject, "CounterTop_1")).ok());
  CHECK(*env.dynamics("Mug_1") == before);
}

TEST_CASE("failed actions are no-ops on state") {
  std::mt19937_64 rng(5);
  const Scene s = play_room();
  for (int round = 0; round < 300; ++round) {
    EnvState env = init_env(s);
    for (const auto& a : testsupport::random_trace(rng, s, 20)) apply_action(env, a);
    const auto before = core_of(env);
    const int tick = env.tick;
    // Guaranteed failures: unknown target; out-of-grid move by facing an edge.
    apply_action(env, act(ActionKind::ToggleOn, "Nope_7"));
    if (!env.held) apply_action(env, act(ActionKind::DropHandObject));
    else apply_action(env, act(ActionKind::PickupObject, "Lamp_1"));
    CHECK(!env.events.back().ok());
    CHECK(core_of(env) == before);
    CHECK(env.tick == tick);
  }
}

TEST_CASE("random-trace properties") {
  std::mt19937_64 rng(99);
  for (const char* id : {"kitchen_01", "kitchen_03", "bathroom_01", "kitchen_sample"}) {
    const Scene s = bundled_scene(id);
    for (int round = 0; round < 100; ++round) {
      EnvState env = init_env(s);
      std::map<std::string, bool> broken;
      for (const auto& a : testsupport::random_trace(rng, s, 60)) {
        apply_action(env, a);
        // Conservation: each object is in exactly one place.
        int in_hand = 0;
        for (std::size_t i = 0; i < env.objects.size(); ++i) {
          const auto& d = env.objects[i];
          if (d.in_hand()) {
            ++in_hand;
            CHECK(env.held == std::optional<std::string>(s.objects[i].id));
            CHECK(!d.parent);
            CHECK(s.objects[i].pickupable());
          } else if (d.parent) {
            CHECK(d.cell == env.dynamics(*d.parent)->cell);
          }
          // isBroken monotone.
          const bool now = d.state.is_broken.value_or(false);
          CHECK((!broken[s.objects[i].id] || now));
          broken[s.objects[i].id] = now;
        }
        CHECK(in_hand == (env.held ? 1 : 0));
        CHECK(env.objects.size() == s.objects.size());
      }
      CHECK(static_cast<std::size_t>(env.tick) == ok_events(env));
      for (const auto& e : env.events)
        if (!e.ok()) CHECK(e.effects.empty());
    }
  }
}

TEST_CASE("replay and state_hash") {
  const Scene s = bundled_scene("kitchen_01");
  CHECK(replay(s, {}).digest == state_hash(init_env(s)));

  std::mt19937_64 rng(3);
  const Trace t = testsupport::random_trace(rng, s, 80);
  CHECK(replay(s, t).digest == replay(s, t).digest);

  EnvState env = init_env(s);
  const auto d0 = state_hash(env);
  REQUIRE(apply_action(env, act(ActionKind::MoveAhead)).ok());
  CHECK(state_hash(env) != d0);
  CHECK(d0.size() == 64);
}

TEST_CASE("state digest is pinned across processes") {
  // Fixed by the canonical form; a change here breaks stored digests.
  const Scene s = bundled_scene("kitchen_sample");
  CHECK(canonical_state(init_env(s)) ==
        R"({"agent":{"cell":[1,0],"heading":0,"pitch":0},"held":null,"objects":[{"cell":[4,2],"id":"CoffeeMachine_1","parent":null,"state":{"is_on":false}},{"cell":[1,2],"id":"Mug_1","parent":null,"state":{}}],"scene":"kitchen_sample","tick":0})");
  CHECK(state_hash(init_env(s)) ==
        "468a3fd666a8aaf3d2745f8232971fcde4b351d0c2004c7ac9ef5f10613ac7f3");
}

TEST_CASE("coffee fixture replays to its goal") {
  const auto hts = testsupport::coffee_structure();
  const Scene s = bundled_scene(hts.scene_id);
  const ReplayResult r = replay(s, flatten(hts));
  for (const auto& e : r.state.events) CHECK(e.ok());
  const GoalReport g = check_goal(r.state, *hts.goal_spec);
  CHECK(g.satisfied);
  CHECK(g.predicates.size() == 3);
}

TEST_CASE("check_goal examples") {
  const Scene s = bundled_scene("kitchen_sample");
  const EnvState env = init_env(s);
  CHECK(check_goal(env, GoalSpec{{AgentHolds{}}}).satisfied);
  const GoalReport r =
      check_goal(env, GoalSpec{{ObjectIn{{true, "Mug"}, "CoffeeMachine"}}});
  CHECK(!r.satisfied);
  REQUIRE(r.predicates.size() == 1);
  CHECK(!r.predicates[0].holds);
  CHECK_THROWS_AS(check_goal(env, GoalSpec{{ObjectIn{{true, "Teapot"}, "CoffeeMachine"}}}),
                  UnknownObjectClass);
  CHECK_THROWS_AS(check_goal(env, GoalSpec{{AgentHolds{"Kettle"}}}), UnknownObjectClass);
  CHECK_THROWS_AS(check_goal(env, GoalSpec{}), std::invalid_argument);
  // By id.
  CHECK(!check_goal(env, GoalSpec{{ObjectInState{{false, "CoffeeMachine_1"},
                                                 StateField::IsOn, true}}})
             .satisfied);
}

TEST_CASE("goal spec JSON round trip") {
  const auto hts = testsupport::coffee_structure();
  const GoalSpec g = *hts.goal_spec;
  CHECK(goal_from_json(goal_to_json(g)) == g);
  CHECK_THROWS_AS(goal_from_json(Json{{"predicates", Json::array()}}), ParseError);
}

TEST_CASE("actions and traces") {
  CHECK_THROWS_AS(make_action(ActionKind::PickupObject), std::invalid_argument);
  CHECK_THROWS_AS(make_action(ActionKind::MoveAhead, "Mug_1"), std::invalid_argument);
  CHECK(make_action(ActionKind::PutObject).well_formed());
  CHECK(act(ActionKind::PickupObject, "Mug_1").label() == "PickupObject(Mug_1)");
  CHECK(act(ActionKind::DropHandObject).is_interaction());
  CHECK(!act(ActionKind::LookUp).is_interaction());

  std::mt19937_64 rng(8);
  const Trace t = testsupport::random_trace(rng, play_room(), 40);
  CHECK(load_trace(serialize_trace(t)) == t);
  CHECK_THROWS_AS(load_trace(R"([{"kind":"Fly"}])"), ParseError);
  CHECK_THROWS_AS(load_trace(R"([{"kind":"PickupObject"}])"), ParseError);
  CHECK_THROWS_AS(load_trace(R"({"kind":"MoveAhead"})"), ParseError);
}

TEST_CASE("published action semantics match the simulator's table") {
  std::ifstream in(testsupport::data_dir().parent_path() / "docs" / "action_semantics.json");
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(Json::parse(ss.str()) == action_semantics_document());
  const Json doc = action_semantics_document();
  CHECK(doc["actions"].size() == std::size(kAllActionKinds));
  CHECK(doc["interaction_range_cells"] == kInteractionRange);
}
