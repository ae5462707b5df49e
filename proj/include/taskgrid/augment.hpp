#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskgrid/navigation.hpp"
#include "taskgrid/task_record.hpp"

namespace taskgrid {

class NoSuchClass : public Error {
 public:
  explicit NoSuchClass(const std::string& cls)
      : Error("no object of class '" + cls + "' in target scene"),
        cls_(cls) {}
  const std::string& object_class() const { return cls_; }

 private:
  std::string cls_;
};

/// BFS distance from `map`'s origin to the nearest cell where the agent
/// could stand next to (or on) `cell`.
std::optional<int> approach_distance(const DistanceMap& map, Cell cell);

/// The target-scene object of class `object_class` nearest to the agent
/// start; ties resolve to canonical order. Throws NoSuchClass.
std::string match_object(const std::string& object_class, const Scene& target);

/// Every (cell, heading) reachable from the agent's current cell from which
/// `object_id` is in reach and unobstructed. Sorted by (cell, heading);
/// pitch copies the current pitch.
std::vector<AgentPose> interaction_poses(const EnvState& env,
                                         const std::string& object_id);
std::vector<AgentPose> interaction_poses(const Scene& scene,
                                         const std::string& object_id);

enum class RetargetFailure {
  NoSuchClass,
  Unreachable,
  InteractionFailed,
  GoalUnsatisfied,
  MissingGoalSpec,
  PlacementInfeasible,
};

std::string_view to_string(RetargetFailure f);

struct RetargetFailureInfo {
  std::size_t step_index = 0;    ///< TaskStep index (second tier)
  std::size_t action_index = 0;  ///< index into flatten(structure)
  RetargetFailure reason = RetargetFailure::GoalUnsatisfied;
  std::string detail;
};

struct RetargetReport {
  std::string source_structure;  ///< structure_id() of the source
  std::string target_scene;
  std::size_t placement_index = 0;
  std::uint64_t placement_seed = 0;
  bool success = false;
  Trace trace;               ///< synthesized trace (partial on failure)
  std::string final_digest;  ///< state_hash after replaying `trace`
  std::optional<RetargetFailureInfo> failure;
  std::size_t inserted_nav_actions = 0;
};

/// Short content id of a structure (first 16 hex digits of its digest).
std::string structure_id(const HierarchicalTaskStructure& s);

/// Replays the interaction skeleton of `structure` in `target`, synthesizing
/// navigation and refocusing before every interaction.
RetargetReport retarget(const HierarchicalTaskStructure& structure,
                        const Scene& target);

/// Seed of placement `placement` in scene `scene_index`.
constexpr std::uint64_t placement_seed(std::uint64_t seed,
                                       std::size_t scene_index,
                                       std::size_t placement) {
  return seed + scene_index * 1000 + placement;
}

/// |scenes| x placements_per_scene retargets, in (scene, placement) order.
/// `threads` > 1 runs jobs concurrently; the result order is unchanged.
std::vector<RetargetReport> augment_batch(
    const HierarchicalTaskStructure& structure, const std::vector<Scene>& scenes,
    std::size_t placements_per_scene, std::uint64_t seed, unsigned threads = 1);

Json report_to_json(const RetargetReport& r);

struct AugmentInputs {
  std::string structure_path;
  std::vector<std::string> scene_ids;
  std::size_t placements_per_scene = 0;
  std::uint64_t seed = 0;
};

/// Writes `<name>.aug.json` plus one `.trace.json` per Success report into
/// `out_dir`; returns the manifest path.
std::filesystem::path write_augmentation(const std::filesystem::path& out_dir,
                                         const std::string& name,
                                         const AugmentInputs& inputs,
                                         const std::vector<RetargetReport>& reports);

}  // namespace taskgrid
