#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskgrid/env.hpp"

namespace taskgrid {

/// A third-tier action as recorded during a demonstration. Failed actions
/// stay in the record (flagged) but are skipped by flatten().
struct RecordedAction {
  AtomicAction action;
  std::optional<std::string> target_class;
  std::optional<FailReason> failure;

  bool failed() const { return failure.has_value(); }
  bool operator==(const RecordedAction&) const = default;
};

/// Second tier: a human-phrased sub-task and the actions performing it.
struct TaskStep {
  std::string description;
  std::vector<RecordedAction> actions;
  bool operator==(const TaskStep&) const = default;
};

/// Goal -> task descriptions -> atomic actions.
struct HierarchicalTaskStructure {
  std::string goal;
  std::optional<GoalSpec> goal_spec;
  std::string scene_id;
  std::string annotator_id;
  std::vector<TaskStep> steps;
  bool success = false;
  bool operator==(const HierarchicalTaskStructure&) const = default;
};

enum class RecorderPhase { Idle, InTask, InStep };
std::string_view to_string(RecorderPhase p);

class IllegalTransition : public Error {
 public:
  IllegalTransition(RecorderPhase phase, std::string_view op)
      : Error("cannot " + std::string(op) + " while " +
              std::string(to_string(phase))),
        phase_(phase),
        op_(op) {}
  RecorderPhase phase() const { return phase_; }
  const std::string& op() const { return op_; }

 private:
  RecorderPhase phase_;
  std::string op_;
};

/// Phase machine collecting one structure:
/// Idle -begin_task-> InTask -begin_step-> InStep -end_step-> InTask
/// -end_task-> Idle. record_action is legal only in InStep.
class RecorderSession {
 public:
  RecorderSession(std::string scene_id, std::string annotator_id);

  RecorderPhase phase() const { return phase_; }
  const HierarchicalTaskStructure& partial() const { return partial_; }

  void begin_task(std::string goal, std::optional<GoalSpec> spec = std::nullopt);
  void begin_step(std::string description);
  /// `event` is what env-sim produced for `action`; `scene` resolves the
  /// target's class.
  void record_action(const AtomicAction& action, const Event& event,
                     const Scene& scene);
  void end_step();
  /// Freezes and returns the structure; the session returns to Idle.
  HierarchicalTaskStructure end_task(bool success);
  /// Discards any partial recording.
  void abort();

 private:
  void require_phase(RecorderPhase expected, std::string_view op) const;

  std::string scene_id_;
  std::string annotator_id_;
  RecorderPhase phase_ = RecorderPhase::Idle;
  HierarchicalTaskStructure partial_;
};

/// Successful actions of every step, in order.
std::vector<AtomicAction> flatten(const HierarchicalTaskStructure& s);

struct StructureStats {
  std::size_t num_steps = 0;
  std::size_t num_atomic_actions = 0;
  bool operator==(const StructureStats&) const = default;
};

StructureStats structure_stats(const HierarchicalTaskStructure& s);

Json structure_to_json(const HierarchicalTaskStructure& s);
HierarchicalTaskStructure structure_from_json(const Json& doc);
std::string serialize_structure(const HierarchicalTaskStructure& s);
HierarchicalTaskStructure deserialize_structure(std::string_view text);
HierarchicalTaskStructure load_structure_file(const std::string& path);

/// Invariant violations of a structure against its scene (empty = valid).
std::vector<std::string> validate_structure(const HierarchicalTaskStructure& s,
                                            const Scene* scene = nullptr);

/// One entry of the bundled task library.
struct TaskDefinition {
  std::string name;
  std::vector<SceneCategory> categories;
  GoalSpec goal;
  std::vector<std::string> suggested_steps;
};

std::vector<TaskDefinition> load_task_library(const std::string& path);
Json task_library_to_json(const std::vector<TaskDefinition>& lib);
const TaskDefinition* find_task(const std::vector<TaskDefinition>& lib,
                                std::string_view name);

}  // namespace taskgrid
