#include "taskgrid/task_record.hpp"

#include <fstream>
#include <sstream>

#include "taskgrid/detail/json_util.hpp"

namespace taskgrid {

using detail::as_array;
using detail::as_bool;
using detail::as_string;
using detail::get_string;
using detail::join_path;
using detail::optional_field;
using detail::require;

std::string_view to_string(RecorderPhase p) {
  switch (p) {
    case RecorderPhase::Idle: return "Idle";
    case RecorderPhase::InTask: return "InTask";
    case RecorderPhase::InStep: return "InStep";
  }
  return "?";
}

RecorderSession::RecorderSession(std::string scene_id, std::string annotator_id)
    : scene_id_(std::move(scene_id)), annotator_id_(std::move(annotator_id)) {}

void RecorderSession::require_phase(RecorderPhase expected,
                                    std::string_view op) const {
  if (phase_ != expected) throw IllegalTransition(phase_, op);
}

void RecorderSession::begin_task(std::string goal, std::optional<GoalSpec> spec) {
  require_phase(RecorderPhase::Idle, "begin_task");
  if (goal.empty()) throw std::invalid_argument("task goal must not be empty");
  partial_ = {};
  partial_.goal = std::move(goal);
  partial_.goal_spec = std::move(spec);
  partial_.scene_id = scene_id_;
  partial_.annotator_id = annotator_id_;
  phase_ = RecorderPhase::InTask;
}

void RecorderSession::begin_step(std::string description) {
  require_phase(RecorderPhase::InTask, "begin_step");
  if (description.empty())
    throw std::invalid_argument("task description must not be empty");
  partial_.steps.push_back({std::move(description), {}});
  phase_ = RecorderPhase::InStep;
}

void RecorderSession::record_action(const AtomicAction& action,
                                    const Event& event, const Scene& scene) {
  require_phase(RecorderPhase::InStep, "record_action");
  RecordedAction rec{action, std::nullopt, event.failure};
  if (action.target)
    if (const auto* o = scene.find(*action.target)) rec.target_class = o->object_class;
  partial_.steps.back().actions.push_back(std::move(rec));
}

void RecorderSession::end_step() {
  require_phase(RecorderPhase::InStep, "end_step");
  phase_ = RecorderPhase::InTask;
}

HierarchicalTaskStructure RecorderSession::end_task(bool success) {
  require_phase(RecorderPhase::InTask, "end_task");
  if (success && partial_.steps.empty())
    throw std::invalid_argument("a successful task needs at least one step");
  partial_.success = success;
  phase_ = RecorderPhase::Idle;
  return std::exchange(partial_, {});
}

void RecorderSession::abort() {
  partial_ = {};
  phase_ = RecorderPhase::Idle;
}

std::vector<AtomicAction> flatten(const HierarchicalTaskStructure& s) {
  std::vector<AtomicAction> out;
  for (const auto& step : s.steps)
    for (const auto& a : step.actions)
      if (!a.failed()) out.push_back(a.action);
  return out;
}

StructureStats structure_stats(const HierarchicalTaskStructure& s) {
  return {s.steps.size(), flatten(s).size()};
}

Json structure_to_json(const HierarchicalTaskStructure& s) {
  Json steps = Json::array();
  for (const auto& step : s.steps) {
    Json actions = Json::array();
    for (const auto& a : step.actions) {
      Json ja = action_to_json(a.action);
      if (a.target_class) ja["target_class"] = *a.target_class;
      if (a.failure) ja["failed"] = std::string(to_string(*a.failure));
      actions.push_back(std::move(ja));
    }
    steps.push_back({{"description", step.description},
                     {"actions", std::move(actions)}});
  }
  Json doc;
  doc["hts_version"] = 1;
  doc["goal"] = s.goal;
  doc["goal_spec"] = s.goal_spec ? goal_to_json(*s.goal_spec) : Json(nullptr);
  doc["scene_id"] = s.scene_id;
  doc["annotator_id"] = s.annotator_id;
  doc["steps"] = std::move(steps);
  doc["success"] = s.success;
  return doc;
}

HierarchicalTaskStructure structure_from_json(const Json& doc) {
  if (!doc.is_object()) throw ParseError("", "expected object");
  detail::check_version(doc, "hts_version", 1);
  HierarchicalTaskStructure s;
  s.goal = get_string(doc, "goal");
  if (const Json* g = optional_field(doc, "goal_spec"))
    s.goal_spec = goal_from_json(*g, "goal_spec");
  s.scene_id = get_string(doc, "scene_id");
  s.annotator_id = get_string(doc, "annotator_id");
  const Json& steps = as_array(require(doc, "steps"), "steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto path = "steps[" + std::to_string(i) + "]";
    TaskStep step;
    step.description = get_string(steps[i], "description", path);
    const auto apath = join_path(path, "actions");
    const Json& actions = as_array(require(steps[i], "actions", path), apath);
    for (std::size_t k = 0; k < actions.size(); ++k) {
      const auto p = apath + "[" + std::to_string(k) + "]";
      RecordedAction rec{action_from_json(actions[k], p), std::nullopt,
                         std::nullopt};
      if (const Json* c = optional_field(actions[k], "target_class"))
        rec.target_class = as_string(*c, join_path(p, "target_class"));
      if (const Json* f = optional_field(actions[k], "failed")) {
        auto name = as_string(*f, join_path(p, "failed"));
        rec.failure = parse_fail_reason(name);
        if (!rec.failure)
          throw ParseError(join_path(p, "failed"), "unknown reason " + name);
      }
      step.actions.push_back(std::move(rec));
    }
    s.steps.push_back(std::move(step));
  }
  s.success = as_bool(require(doc, "success"), "success");
  return s;
}

std::string serialize_structure(const HierarchicalTaskStructure& s) {
  return structure_to_json(s).dump(2) + "\n";
}

HierarchicalTaskStructure deserialize_structure(std::string_view text) {
  return structure_from_json(detail::parse_json(text, "structure"));
}

HierarchicalTaskStructure load_structure_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open structure file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_structure(ss.str());
}

std::vector<std::string> validate_structure(const HierarchicalTaskStructure& s,
                                            const Scene* scene) {
  std::vector<std::string> out;
  if (s.goal.empty()) out.push_back("goal is empty");
  if (s.success && s.steps.empty())
    out.push_back("successful structure has no steps");
  if (scene && scene->id != s.scene_id)
    out.push_back("structure scene '" + s.scene_id + "' does not match '" +
                  scene->id + "'");
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const auto& step = s.steps[i];
    if (step.description.empty())
      out.push_back("step " + std::to_string(i) + " has no description");
    for (const auto& a : step.actions) {
      if (!a.action.target || !scene) continue;
      const auto* o = scene->find(*a.action.target);
      if (!o)
        out.push_back("step " + std::to_string(i) + ": target '" +
                      *a.action.target + "' not in scene");
      else if (a.target_class && *a.target_class != o->object_class)
        out.push_back("step " + std::to_string(i) + ": target '" +
                      *a.action.target + "' is a " + o->object_class + ", not " +
                      *a.target_class);
    }
  }
  return out;
}

std::vector<TaskDefinition> load_task_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open task library '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  Json doc = detail::parse_json(ss.str(), "task_library");
  detail::check_version(doc, "task_library_version", 1);
  std::vector<TaskDefinition> lib;
  const Json& tasks = as_array(require(doc, "tasks"), "tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto p = "tasks[" + std::to_string(i) + "]";
    TaskDefinition t;
    t.name = get_string(tasks[i], "name", p);
    for (const auto& c : as_array(require(tasks[i], "categories", p),
                                  join_path(p, "categories"))) {
      auto cat = parse_category(as_string(c, join_path(p, "categories")));
      if (!cat) throw ParseError(join_path(p, "categories"), "unknown category");
      t.categories.push_back(*cat);
    }
    t.goal = goal_from_json(require(tasks[i], "goal_spec", p),
                            join_path(p, "goal_spec"));
    if (const Json* st = optional_field(tasks[i], "suggested_steps"))
      for (const auto& d : as_array(*st, join_path(p, "suggested_steps")))
        t.suggested_steps.push_back(as_string(d, join_path(p, "suggested_steps")));
    lib.push_back(std::move(t));
  }
  return lib;
}

Json task_library_to_json(const std::vector<TaskDefinition>& lib) {
  Json tasks = Json::array();
  for (const auto& t : lib) {
    Json cats = Json::array();
    for (auto c : t.categories) cats.push_back(std::string(to_string(c)));
    tasks.push_back({{"name", t.name},
                     {"categories", std::move(cats)},
                     {"goal_spec", goal_to_json(t.goal)},
                     {"suggested_steps", t.suggested_steps}});
  }
  return {{"task_library_version", 1}, {"tasks", std::move(tasks)}};
}

const TaskDefinition* find_task(const std::vector<TaskDefinition>& lib,
                                std::string_view name) {
  for (const auto& t : lib)
    if (t.name == name) return &t;
  return nullptr;
}

}  // namespace taskgrid
