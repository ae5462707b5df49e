#include <doctest.h>

#include <functional>
#include <random>

#include "support.hpp"
#include "taskgrid/task_record.hpp"

using namespace taskgrid;
using testsupport::bundled_scene;

namespace {

enum class Op { BeginTask, BeginStep, Record, EndStep, EndTask };
constexpr Op kOps[] = {Op::BeginTask, Op::BeginStep, Op::Record, Op::EndStep, Op::EndTask};

/// Reference phase table: the phase each op is legal in and where it leads.
std::optional<RecorderPhase> expected_next(RecorderPhase p, Op op) {
  switch (op) {
    case Op::BeginTask: return p == RecorderPhase::Idle ? std::optional(RecorderPhase::InTask) : std::nullopt;
    case Op::BeginStep: return p == RecorderPhase::InTask ? std::optional(RecorderPhase::InStep) : std::nullopt;
    case Op::Record: return p == RecorderPhase::InStep ? std::optional(RecorderPhase::InStep) : std::nullopt;
    case Op::EndStep: return p == RecorderPhase::InStep ? std::optional(RecorderPhase::InTask) : std::nullopt;
    case Op::EndTask: return p == RecorderPhase::InTask ? std::optional(RecorderPhase::Idle) : std::nullopt;
  }
  return std::nullopt;
}

void run(RecorderSession& r, Op op, const Scene& scene) {
  const AtomicAction a = make_action(ActionKind::MoveAhead);
  const Event ev{0, a, std::nullopt, {}};
  switch (op) {
    case Op::BeginTask: r.begin_task("goal"); break;
    case Op::BeginStep: r.begin_step("step"); break;
    case Op::Record: r.record_action(a, ev, scene); break;
    case Op::EndStep: r.end_step(); break;
    case Op::EndTask: r.end_task(false); break;
  }
}

}  // namespace

TEST_CASE("phase machine matches its transition table on every op sequence") {
  const Scene scene = bundled_scene("kitchen_sample");
  // All sequences of up to 6 ops from Idle.
  std::function<void(std::vector<Op>&)> walk = [&](std::vector<Op>& prefix) {
    RecorderSession r("kitchen_sample", "ann");
    RecorderPhase model = RecorderPhase::Idle;
    for (Op op : prefix) {
      const auto next = expected_next(model, op);
      if (next) {
        CHECK_NOTHROW(run(r, op, scene));
        model = *next;
      } else {
        try {
          run(r, op, scene);
          FAIL("expected IllegalTransition");
        } catch (const IllegalTransition& e) {
          CHECK(e.phase() == model);
        }
      }
      CHECK(r.phase() == model);
    }
    if (prefix.size() == 6) return;
    for (Op op : kOps) {
      prefix.push_back(op);
      walk(prefix);
      prefix.pop_back();
    }
  };
  std::vector<Op> prefix;
  walk(prefix);
}

TEST_CASE("recording a demonstration") {
  const Scene scene = bundled_scene("kitchen_sample");
  EnvState env = init_env(scene);
  RecorderSession r(scene.id, "ann-7");
  CHECK_THROWS_AS(r.begin_task(""), std::invalid_argument);
  r.begin_task("Move the mug");
  CHECK_THROWS_AS(r.begin_step(""), std::invalid_argument);
  r.begin_step("Walk to the mug");
  for (auto a : {make_action(ActionKind::MoveAhead), make_action(ActionKind::DropHandObject)})
    r.record_action(a, apply_action(env, a), scene);
  r.end_step();
  r.begin_step("Pick it up");
  const auto pick = make_action(ActionKind::PickupObject, "Mug_1");
  r.record_action(pick, apply_action(env, pick), scene);
  r.end_step();
  const HierarchicalTaskStructure s = r.end_task(true);
  CHECK(r.phase() == RecorderPhase::Idle);
  CHECK(r.partial().steps.empty());
  CHECK(s.scene_id == "kitchen_sample");
  CHECK(s.annotator_id == "ann-7");
  REQUIRE(s.steps.size() == 2);
  CHECK(s.steps[0].actions[1].failure == std::optional(FailReason::HandsEmpty));
  CHECK(s.steps[1].actions[0].target_class == std::optional<std::string>("Mug"));
  CHECK(structure_stats(s) == StructureStats{2, 2});
  CHECK(flatten(s) == std::vector<AtomicAction>{make_action(ActionKind::MoveAhead), pick});
  CHECK(validate_structure(s, &scene).empty());
}

TEST_CASE("an empty successful task is rejected; a failed one is kept") {
  RecorderSession r("s", "a");
  r.begin_task("goal");
  CHECK_THROWS_AS(r.end_task(true), std::invalid_argument);
  CHECK(r.phase() == RecorderPhase::InTask);
  const auto s = r.end_task(false);
  CHECK(!s.success);
  CHECK(s.steps.empty());
}

TEST_CASE("abort discards the partial structure") {
  RecorderSession r("s", "a");
  r.begin_task("goal");
  r.begin_step("x");
  r.abort();
  CHECK(r.phase() == RecorderPhase::Idle);
  r.begin_task("again");
  CHECK(r.partial().steps.empty());
}

TEST_CASE("flatten replays to the same state as the recorded session") {
  std::mt19937_64 rng(17);
  for (const char* id : {"kitchen_01", "kitchen_03", "bathroom_01"}) {
    const Scene scene = bundled_scene(id);
    for (int round = 0; round < 30; ++round) {
      EnvState live = init_env(scene);
      RecorderSession r(scene.id, "a");
      r.begin_task("g");
      const int steps = 1 + static_cast<int>(rng() % 4);
      for (int k = 0; k < steps; ++k) {
        r.begin_step("step " + std::to_string(k));
        for (const auto& a : testsupport::random_trace(rng, scene, 15))
          r.record_action(a, apply_action(live, a), scene);
        r.end_step();
      }
      const auto s = r.end_task(true);
      const ReplayResult rr = replay(scene, flatten(s));
      CHECK(rr.digest == state_hash(live));
      for (const auto& e : rr.state.events) CHECK(e.ok());
      CHECK(structure_stats(s).num_atomic_actions == static_cast<std::size_t>(live.tick));

      CHECK(deserialize_structure(serialize_structure(s)) == s);
    }
  }
}

TEST_CASE("bundled structures round trip byte for byte") {
  for (const auto& entry :
       std::filesystem::directory_iterator(testsupport::data_dir() / "tasks")) {
    const auto name = entry.path().filename().string();
    if (name.find(".hts.json") == std::string::npos) continue;
    const auto s = load_structure_file(entry.path().string());
    CHECK(deserialize_structure(serialize_structure(s)) == s);
    CHECK(serialize_structure(deserialize_structure(serialize_structure(s))) ==
          serialize_structure(s));
    const Scene scene = bundled_scene(s.scene_id);
    CHECK(validate_structure(s, &scene).empty());
  }
}

TEST_CASE("malformed structures name the offending field") {
  Json doc = structure_to_json(testsupport::coffee_structure());
  SUBCASE("missing goal") {
    doc.erase("goal");
    try {
      structure_from_json(doc);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.field() == "goal");
    }
  }
  SUBCASE("unknown failure reason") {
    doc["steps"][0]["actions"][0]["failed"] = "Tripped";
    try {
      structure_from_json(doc);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.field() == "steps[0].actions[0].failed");
    }
  }
  SUBCASE("bad version") {
    doc["hts_version"] = 9;
    CHECK_THROWS_AS(structure_from_json(doc), ParseError);
  }
  SUBCASE("not json") { CHECK_THROWS_AS(deserialize_structure("[1,"), ParseError); }
}

TEST_CASE("validate_structure flags mismatches") {
  auto s = testsupport::coffee_structure();
  const Scene other = bundled_scene("kitchen_02");
  CHECK(!validate_structure(s, &other).empty());
  s.steps[0].actions.push_back({make_action(ActionKind::PickupObject, "Ghost_1"), "Mug", std::nullopt});
  const Scene own = bundled_scene(s.scene_id);
  CHECK(validate_structure(s, &own).size() == 1);
  s.goal.clear();
  CHECK(validate_structure(s).size() == 1);
}

TEST_CASE("task library") {
  const auto lib = load_task_library((testsupport::data_dir() / "tasks" / "library.json").string());
  CHECK(lib.size() == 6);
  for (const auto& t : lib) {
    CHECK(!t.name.empty());
    CHECK(!t.categories.empty());
    CHECK(!t.goal.predicates.empty());
    CHECK(find_task(lib, t.name) == &t);
  }
  CHECK(find_task(lib, "no such task") == nullptr);
  const Json j = task_library_to_json(lib);
  CHECK(j["tasks"].size() == lib.size());
}
