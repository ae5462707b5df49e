#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "taskgrid/render.hpp"
#include "taskgrid/task_record.hpp"

namespace taskgrid {

inline constexpr int kProtoVersion = 1;

/// Scenes a service offers, keyed by id.
struct SceneCatalog {
  std::map<std::string, std::shared_ptr<const Scene>> scenes;

  /// Every `*.scene.json` under `dir` (non-recursive).
  static SceneCatalog load(const std::filesystem::path& dir);
  std::vector<std::string> ids() const;
};

struct ServiceConfig {
  std::filesystem::path scene_dir;
  std::filesystem::path dataset_root;
  std::filesystem::path task_library;  ///< empty: no library offered
  RenderConfig render;
};

/// Dataset root: explicit value, else $TASKGRID_DATASET_ROOT, else `fallback`.
std::filesystem::path resolve_dataset_root(
    const std::optional<std::filesystem::path>& explicit_root,
    const std::filesystem::path& fallback);

enum class ErrorCode {
  NoScene,
  IllegalTransition,
  BadAction,
  ProtocolError,
  UnknownScene,
  RecordingAborted,
  VersionMismatch,
  SaveFailed,
};

std::string_view to_string(ErrorCode c);

/// Server-side state of one connection. Messages are JSON objects with a
/// "type" and optional "seq"; handle() returns the outgoing messages in send
/// order, the first being the reply (carrying "reply_to").
class Session {
 public:
  Session(std::shared_ptr<const SceneCatalog> catalog,
          std::shared_ptr<const std::vector<TaskDefinition>> library,
          ServiceConfig config, std::string session_id = "session");

  std::vector<Json> handle(const Json& message);
  std::vector<Json> handle_text(std::string_view text);

  const std::optional<EnvState>& env() const { return env_; }
  const RecorderSession* recorder() const { return recorder_.get(); }

 private:
  Json reply(const Json& seq, Json body) const;
  Json error(const Json& seq, ErrorCode code, const std::string& message) const;
  Json state_message() const;
  Json frame_message() const;

  std::vector<Json> on_hello(const Json& seq, const Json& m);
  std::vector<Json> on_load_scene(const Json& seq, const Json& m);
  std::vector<Json> on_act(const Json& seq, const Json& m);
  std::vector<Json> on_observe(const Json& seq);
  std::vector<Json> on_recorder(const Json& seq, const std::string& type,
                                const Json& m);
  std::vector<Json> on_save(const Json& seq);

  std::shared_ptr<const SceneCatalog> catalog_;
  std::shared_ptr<const std::vector<TaskDefinition>> library_;
  ServiceConfig config_;
  std::string id_;

  std::shared_ptr<const Scene> scene_;
  std::optional<EnvState> env_;
  std::unique_ptr<RecorderSession> recorder_;
  Trace task_trace_;  ///< actions attempted since BeginTask
  std::optional<HierarchicalTaskStructure> finished_;
  Trace finished_trace_;
};

}  // namespace taskgrid
