#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "taskgrid/render.hpp"
#include "taskgrid/task_record.hpp"

namespace taskgrid {

namespace fs = std::filesystem;

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id)
      : Error("instance id '" + id + "' already exists") {}
};

class CorruptManifest : public Error {
 public:
  using Error::Error;
};

enum class Origin { Human, Augmented };
std::string_view to_string(Origin o);
std::optional<Origin> parse_origin(std::string_view s);

/// One manifest row. Paths are relative to the dataset root.
struct InstanceEntry {
  std::string id;
  std::string task;
  SceneCategory category = SceneCategory::Kitchen;
  std::string scene_id;
  std::string annotator_id;
  Origin origin = Origin::Human;
  std::string structure_path;
  std::string trace_path;
  std::optional<std::string> frames_path;
  bool operator==(const InstanceEntry&) const = default;
};

struct DatasetManifest {
  int version = 1;
  std::vector<InstanceEntry> instances;
};

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";

/// Reads `root/manifest.json`; a missing file is an empty dataset.
/// Throws CorruptManifest.
DatasetManifest read_manifest(const fs::path& root);

struct SaveOptions {
  /// Defaults to the structure's goal text.
  std::optional<std::string> task;
  /// Defaults to a content-hash prefix.
  std::optional<std::string> id;
  Origin origin = Origin::Human;
  /// Rendered episode to store under frames/ (optional).
  const std::vector<FrameBundle>* frames = nullptr;
};

/// Writes `root/<category>/<task-slug>/<id>/` and adds the manifest entry
/// atomically. Throws IoError, DuplicateId, CorruptManifest.
std::string save_instance(const fs::path& root, const Scene& scene,
                          const HierarchicalTaskStructure& structure,
                          const Trace& trace, const SaveOptions& options = {});

struct LoadedInstance {
  InstanceEntry entry;
  HierarchicalTaskStructure structure;
  Trace trace;
};

LoadedInstance load_instance(const fs::path& root, const std::string& id);

struct InstanceFilter {
  std::optional<std::string> task;
  std::optional<SceneCategory> category;
  std::optional<Origin> origin;
};

/// Sorted by (category, task, id).
std::vector<InstanceEntry> list_instances(const fs::path& root,
                                          const InstanceFilter& filter = {});

/// Referential-integrity problems (empty when the dataset is consistent).
std::vector<std::string> verify(const fs::path& root);

std::string task_slug(std::string_view task);

/// Aggregate over one origin. Means are kept as integer tenths, rounded
/// half up, so the printed figures are exact.
struct StatsRow {
  std::string label;  ///< category name or "Total"
  std::size_t num_tasks = 0;
  std::size_t num_instances = 0;
  std::size_t total_descriptions = 0;
  std::size_t total_atomic_actions = 0;

  long avg_descriptions_tenths() const;
  long avg_atomic_actions_tenths() const;
  bool operator==(const StatsRow&) const = default;
};

struct StatsTable {
  std::vector<StatsRow> categories;  ///< LivingRoom, Bedroom, Bathroom, Kitchen
  StatsRow total;
  bool operator==(const StatsTable&) const = default;
};

struct DatasetStats {
  StatsTable human;
  StatsTable augmented;
  bool operator==(const DatasetStats&) const = default;
};

/// round_half_up(10 * sum / n), or 0 when n is 0.
long mean_tenths(std::size_t sum, std::size_t n);
std::string format_tenths(long tenths);

/// Aggregates per (origin, category) from the manifest and the stored
/// structures. Throws CorruptManifest.
DatasetStats compute_stats(const fs::path& root);

/// Builds a table from per-instance figures (shared by compute_stats and
/// any independent recount).
struct InstanceFigures {
  SceneCategory category;
  std::string task;
  std::size_t descriptions;
  std::size_t atomic_actions;
};
StatsTable tabulate(const std::vector<InstanceFigures>& rows);

std::string stats_table_text(const DatasetStats& s);
Json stats_to_json(const DatasetStats& s);

namespace detail {
/// Test hook run after the temporary manifest is written and synced but
/// before it replaces the live one.
void set_before_manifest_rename(std::function<void()> hook);
}  // namespace detail

}  // namespace taskgrid
