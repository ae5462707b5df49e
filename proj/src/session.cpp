#include "taskgrid/session.hpp"

#include <algorithm>
#include <cstdlib>

#include "taskgrid/dataset.hpp"
#include "taskgrid/detail/json_util.hpp"
#include "taskgrid/digest.hpp"
#include "taskgrid/netpbm.hpp"

namespace taskgrid {

namespace fs = std::filesystem;

SceneCatalog SceneCatalog::load(const fs::path& dir) {
  SceneCatalog cat;
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot list scenes in " + dir.string() + ": " + ec.message());
  for (const auto& entry : it) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !name.ends_with(".scene.json")) continue;
    auto scene = std::make_shared<const Scene>(load_scene_file(entry.path().string()));
    cat.scenes[scene->id] = std::move(scene);
  }
  return cat;
}

std::vector<std::string> SceneCatalog::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : scenes) out.push_back(id);
  return out;
}

fs::path resolve_dataset_root(const std::optional<fs::path>& explicit_root,
                              const fs::path& fallback) {
  if (explicit_root) return *explicit_root;
  if (const char* env = std::getenv("TASKGRID_DATASET_ROOT"); env && *env)
    return env;
  return fallback;
}

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::NoScene: return "NoScene";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::BadAction: return "BadAction";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::UnknownScene: return "UnknownScene";
    case ErrorCode::RecordingAborted: return "RecordingAborted";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SaveFailed: return "SaveFailed";
  }
  return "?";
}

Session::Session(std::shared_ptr<const SceneCatalog> catalog,
                 std::shared_ptr<const std::vector<TaskDefinition>> library,
                 ServiceConfig config, std::string session_id)
    : catalog_(std::move(catalog)),
      library_(std::move(library)),
      config_(std::move(config)),
      id_(std::move(session_id)) {}

Json Session::reply(const Json& seq, Json body) const {
  body["proto_version"] = kProtoVersion;
  body["reply_to"] = seq;
  return body;
}

Json Session::error(const Json& seq, ErrorCode code,
                    const std::string& message) const {
  return reply(seq, {{"type", "Error"},
                     {"code", std::string(to_string(code))},
                     {"message", message}});
}

namespace {

Json push(Json body) {
  body["proto_version"] = kProtoVersion;
  return body;
}

Json cell_json(Cell c) { return Json::array({c.x, c.z}); }

Json event_json(const Event& ev) {
  Json effects = Json::array();
  for (const auto& e : ev.effects)
    effects.push_back({{"object", e.object_id}, {"field", e.field}, {"value", e.value}});
  return {{"tick", ev.tick},
          {"action", action_to_json(ev.action)},
          {"outcome", ev.ok() ? std::string("Ok") : std::string(to_string(*ev.failure))},
          {"effects", effects}};
}

}  // namespace

Json Session::state_message() const {
  const EnvState& env = *env_;
  return push({{"type", "State"},
               {"scene_id", scene_->id},
               {"agent",
                {{"cell", cell_json(env.agent.cell)},
                 {"heading", env.agent.heading},
                 {"pitch", env.agent.pitch}}},
               {"held", env.held ? Json(*env.held) : Json(nullptr)},
               {"tick", env.tick},
               {"phase", std::string(to_string(recorder_->phase()))},
               {"digest", state_hash(env)}});
}

Json Session::frame_message() const {
  const FrameBundle f = render(*env_, config_.render);
  const FrameLegend legend = FrameLegend::for_scene(*scene_);
  Json classes = Json::array();
  for (std::size_t i = 0; i < legend.classes.size(); ++i)
    classes.push_back({{"index", i + 1}, {"name", legend.classes[i]}});
  Json instances = Json::array();
  for (std::size_t i = 0; i < scene_->objects.size(); ++i)
    instances.push_back({{"index", i + 1},
                         {"id", scene_->objects[i].id},
                         {"class_index", legend.instance_class[i]}});
  return push({{"type", "Frame"},
               {"tick", env_->tick},
               {"width", f.width},
               {"height", f.height},
               {"rgb", base64_encode(netpbm::encode_ppm(f.width, f.height, f.rgb))},
               {"depth", base64_encode(netpbm::encode_pgm16(f.width, f.height, f.depth))},
               {"instance", base64_encode(netpbm::encode_pgm16(f.width, f.height, f.instance_seg))},
               {"class", base64_encode(netpbm::encode_pgm16(f.width, f.height, f.class_seg))},
               {"classes", classes},
               {"instances", instances}});
}

std::vector<Json> Session::handle_text(std::string_view text) {
  Json m;
  try {
    m = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    return {error(nullptr, ErrorCode::ProtocolError,
                  std::string("malformed message: ") + e.what())};
  }
  return handle(m);
}

std::vector<Json> Session::handle(const Json& m) {
  if (!m.is_object())
    return {error(nullptr, ErrorCode::ProtocolError, "message must be an object")};
  const Json seq = m.contains("seq") ? m["seq"] : Json(nullptr);
  const auto type_it = m.find("type");
  if (type_it == m.end() || !type_it->is_string())
    return {error(seq, ErrorCode::ProtocolError, "missing message type")};
  if (auto v = m.find("proto_version");
      v != m.end() && !(v->is_number_integer() && v->get<long long>() == kProtoVersion))
    return {error(seq, ErrorCode::VersionMismatch,
                  "server speaks proto_version " + std::to_string(kProtoVersion))};
  const std::string type = type_it->get<std::string>();

  try {
    if (type == "Hello") return on_hello(seq, m);
    if (type == "LoadScene") return on_load_scene(seq, m);
    if (type == "Act") return on_act(seq, m);
    if (type == "Observe") return on_observe(seq);
    if (type == "BeginTask" || type == "BeginStep" || type == "EndStep" ||
        type == "EndTask")
      return on_recorder(seq, type, m);
    if (type == "Save") return on_save(seq);
  } catch (const ParseError& e) {
    return {error(seq, ErrorCode::ProtocolError, e.what())};
  }
  return {error(seq, ErrorCode::ProtocolError, "unknown message type '" + type + "'")};
}

std::vector<Json> Session::on_hello(const Json& seq, const Json& m) {
  if (!m.contains("proto_version"))
    return {error(seq, ErrorCode::VersionMismatch, "Hello must carry proto_version")};
  Json tasks = library_ ? task_library_to_json(*library_)["tasks"] : Json::array();
  return {reply(seq, {{"type", "Welcome"},
                      {"session_id", id_},
                      {"scenes", catalog_->ids()},
                      {"task_library", tasks}})};
}

std::vector<Json> Session::on_load_scene(const Json& seq, const Json& m) {
  const std::string id = detail::get_string(m, "scene_id");
  auto it = catalog_->scenes.find(id);
  if (it == catalog_->scenes.end())
    return {error(seq, ErrorCode::UnknownScene, "no scene '" + id + "'")};

  const bool aborted = recorder_ && recorder_->phase() != RecorderPhase::Idle;
  std::string annotator = "anonymous";
  if (const Json* a = detail::optional_field(m, "annotator_id"))
    annotator = detail::as_string(*a, "annotator_id");

  scene_ = it->second;
  env_ = init_env(scene_);
  recorder_ = std::make_unique<RecorderSession>(scene_->id, annotator);
  task_trace_.clear();
  finished_.reset();
  finished_trace_.clear();

  Json first = aborted ? error(seq, ErrorCode::RecordingAborted,
                               "scene reload discarded the recording in progress")
                       : reply(seq, state_message());
  std::vector<Json> out{std::move(first)};
  if (aborted) out.push_back(state_message());
  out.push_back(frame_message());
  return out;
}

std::vector<Json> Session::on_act(const Json& seq, const Json& m) {
  if (!env_) return {error(seq, ErrorCode::NoScene, "load a scene first")};
  AtomicAction action;
  try {
    action = action_from_json(detail::require(m, "action"), "action");
  } catch (const ParseError& e) {
    return {error(seq, ErrorCode::BadAction, e.what())};
  }
  if (recorder_->phase() == RecorderPhase::InTask)
    return {error(seq, ErrorCode::IllegalTransition,
                  "begin a step before acting in a task")};

  const Event ev = apply_action(*env_, action);
  if (recorder_->phase() == RecorderPhase::InStep) {
    recorder_->record_action(action, ev, *scene_);
    task_trace_.push_back(action);
  }
  std::vector<Json> out{reply(seq, {{"type", "Event"}, {"event", event_json(ev)}})};
  if (ev.ok()) {
    out.push_back(frame_message());
    out.push_back(state_message());
  }
  return out;
}

std::vector<Json> Session::on_observe(const Json& seq) {
  if (!env_) return {error(seq, ErrorCode::NoScene, "load a scene first")};
  return {reply(seq, state_message()), frame_message()};
}

std::vector<Json> Session::on_recorder(const Json& seq, const std::string& type,
                                       const Json& m) {
  if (!env_) return {error(seq, ErrorCode::NoScene, "load a scene first")};
  std::vector<Json> extra;
  try {
    if (type == "BeginTask") {
      const std::string goal = detail::get_string(m, "goal");
      std::optional<GoalSpec> spec;
      if (const Json* g = detail::optional_field(m, "goal_spec")) {
        spec = goal_from_json(*g);
      } else if (const Json* t = detail::optional_field(m, "task")) {
        const std::string name = detail::as_string(*t, "task");
        const TaskDefinition* def = library_ ? find_task(*library_, name) : nullptr;
        if (!def)
          return {error(seq, ErrorCode::ProtocolError, "no library task '" + name + "'")};
        spec = def->goal;
      }
      recorder_->begin_task(goal, std::move(spec));
      // Demonstrations start from the scene's initial state so the
      // recorded actions replay on their own.
      env_ = init_env(scene_);
      task_trace_.clear();
      finished_.reset();
      extra.push_back(frame_message());
    } else if (type == "BeginStep") {
      recorder_->begin_step(detail::get_string(m, "description"));
    } else if (type == "EndStep") {
      recorder_->end_step();
    } else {
      const Json& s = detail::require(m, "success");
      const bool success = detail::as_bool(s, "success");
      auto structure = recorder_->end_task(success);
      if (success) {
        finished_ = std::move(structure);
        finished_trace_ = task_trace_;
      } else {
        finished_.reset();
      }
      task_trace_.clear();
    }
  } catch (const IllegalTransition& e) {
    return {error(seq, ErrorCode::IllegalTransition, e.what())};
  } catch (const std::invalid_argument& e) {
    return {error(seq, ErrorCode::ProtocolError, e.what())};
  }
  std::vector<Json> out{reply(seq, state_message())};
  for (auto& x : extra) out.push_back(std::move(x));
  return out;
}

std::vector<Json> Session::on_save(const Json& seq) {
  if (!env_) return {error(seq, ErrorCode::NoScene, "load a scene first")};
  if (!finished_)
    return {error(seq, ErrorCode::IllegalTransition,
                  "nothing to save: end a task successfully first")};
  try {
    const std::string id =
        save_instance(config_.dataset_root, *scene_, *finished_, finished_trace_);
    finished_.reset();
    finished_trace_.clear();
    return {reply(seq, {{"type", "Saved"}, {"instance_id", id}})};
  } catch (const Error& e) {
    return {error(seq, ErrorCode::SaveFailed, e.what())};
  }
}

}  // namespace taskgrid
