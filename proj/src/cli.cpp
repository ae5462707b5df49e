#include "taskgrid/cli.hpp"

#include <csignal>
#include <filesystem>
#include <functional>

#include <CLI11.hpp>

#include "taskgrid/augment.hpp"
#include "taskgrid/dataset.hpp"
#include "taskgrid/detail/json_util.hpp"
#include "taskgrid/netpbm.hpp"
#include "taskgrid/server.hpp"

namespace taskgrid {

namespace fs = std::filesystem;

namespace {

const fs::path kDataDir = TASKGRID_DATA_DIR;

/// A scene argument is a file path or the id of a scene in `scene_dir`.
Scene resolve_scene(const std::string& arg, const fs::path& scene_dir) {
  if (fs::is_regular_file(arg)) return load_scene_file(arg);
  const fs::path candidate = scene_dir / (arg + ".scene.json");
  if (fs::is_regular_file(candidate)) return load_scene_file(candidate.string());
  throw IoError("no scene file or bundled scene named '" + arg + "'");
}

enum class DocKind { Scene, Structure, Trace, Unknown };

DocKind sniff(const std::string& path, const Json& doc) {
  if (path.ends_with(".scene.json")) return DocKind::Scene;
  if (path.ends_with(".hts.json")) return DocKind::Structure;
  if (path.ends_with(".trace.json")) return DocKind::Trace;
  if (doc.is_array()) return DocKind::Trace;
  if (doc.is_object() && doc.contains("scene_version")) return DocKind::Scene;
  if (doc.is_object() && doc.contains("hts_version")) return DocKind::Structure;
  return DocKind::Unknown;
}

int cmd_validate(const std::string& path, const std::string& scene_arg,
                 const fs::path& scene_dir, std::ostream& out, std::ostream& err) {
  const std::string text = netpbm::read_file(path);
  const Json doc = detail::parse_json(text, path);
  switch (sniff(path, doc)) {
    case DocKind::Scene:
      load_scene(text);
      out << "ok scene " << path << "\n";
      return 0;
    case DocKind::Trace:
      load_trace(text);
      out << "ok trace " << path << "\n";
      return 0;
    case DocKind::Structure: {
      const auto s = deserialize_structure(text);
      std::optional<Scene> scene;
      if (!scene_arg.empty()) scene = resolve_scene(scene_arg, scene_dir);
      const auto problems = validate_structure(s, scene ? &*scene : nullptr);
      if (!problems.empty()) {
        for (const auto& p : problems) err << path << ": " << p << "\n";
        return 1;
      }
      out << "ok structure " << path << "\n";
      return 0;
    }
    case DocKind::Unknown: break;
  }
  err << path << ": not a scene, structure or trace document\n";
  return 1;
}

int cmd_serve(const std::string& bind, unsigned short port,
              const ServiceConfig& cfg, std::ostream& out) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  // Block before any thread exists so only sigwait sees the signals.
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  CollectServer server(cfg);
  server.start(bind, port);
  out << "listening on " << bind << ":" << server.port() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  out << "stopped" << std::endl;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Grid household simulator and task-demonstration toolkit", "taskgrid"};
  app.require_subcommand(1);
  std::function<int()> action;

  // serve
  auto* serve = app.add_subcommand("serve", "Run the WebSocket collection server");
  std::string bind = "127.0.0.1";
  unsigned short port = 8765;
  std::string scene_dir = (kDataDir / "scenes").string();
  std::string dataset;
  std::string library = (kDataDir / "tasks" / "library.json").string();
  serve->add_option("--bind", bind, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks one)");
  serve->add_option("--scenes", scene_dir, "Directory of *.scene.json files");
  serve->add_option("--dataset", dataset,
                    "Dataset root (default: $TASKGRID_DATASET_ROOT or ./dataset)");
  serve->add_option("--library", library, "Task library document");
  serve->callback([&] {
    action = [&] {
      ServiceConfig cfg;
      cfg.scene_dir = scene_dir;
      cfg.dataset_root = resolve_dataset_root(
          dataset.empty() ? std::nullopt : std::optional<fs::path>(dataset), "dataset");
      cfg.task_library = library;
      return cmd_serve(bind, port, cfg, out);
    };
  });

  // replay
  auto* rep = app.add_subcommand("replay", "Replay a trace and print the final state digest");
  std::string scene_arg, trace_path;
  rep->add_option("scene", scene_arg, "Scene file or bundled scene id")->required();
  rep->add_option("trace", trace_path, "Trace file")->required();
  rep->add_option("--scene-dir", scene_dir, "Directory for scene ids");
  rep->callback([&] {
    action = [&] {
      const Scene scene = resolve_scene(scene_arg, scene_dir);
      const Trace trace = load_trace_file(trace_path);
      out << replay(scene, trace).digest << "\n";
      return 0;
    };
  });

  // render
  auto* ren = app.add_subcommand("render", "Render an episode into annotation rasters");
  std::string outdir;
  RenderConfig rcfg;
  int far_plane = 0;
  ren->add_option("scene", scene_arg, "Scene file or bundled scene id")->required();
  ren->add_option("trace", trace_path, "Trace file")->required();
  ren->add_option("outdir", outdir, "Output directory")->required();
  ren->add_option("--width", rcfg.width, "Frame width");
  ren->add_option("--height", rcfg.height, "Frame height");
  ren->add_option("--fov", rcfg.fov_degrees, "Horizontal field of view (degrees)");
  ren->add_option("--far", far_plane, "Far plane in millimetres");
  ren->add_option("--scene-dir", scene_dir, "Directory for scene ids");
  ren->callback([&] {
    action = [&] {
      if (far_plane > 0) rcfg.far_plane_mm = far_plane;
      rcfg.validate();
      const Scene scene = resolve_scene(scene_arg, scene_dir);
      const Trace trace = load_trace_file(trace_path);
      const auto frames = render_episode(scene, trace, rcfg);
      const ReplayResult res = replay(scene, trace);
      std::vector<std::string> outcomes;
      for (const auto& ev : res.state.events)
        outcomes.emplace_back(ev.ok() ? "Ok" : to_string(*ev.failure));
      const auto set = encode_frames(frames, outdir, scene, trace, outcomes);
      out << frames.size() << " frames, " << set.files.size() << " files in "
          << outdir << "\n";
      return 0;
    };
  });

  // augment
  auto* aug = app.add_subcommand("augment", "Retarget a task structure into other scenes");
  std::string structure_path;
  std::vector<std::string> scenes;
  std::size_t placements = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string aug_out = "augmented";
  std::string aug_name;
  aug->add_option("structure", structure_path, "Task structure (.hts.json)")->required();
  aug->add_option("--scenes", scenes, "Scene files or bundled scene ids")->required();
  aug->add_option("--placements", placements, "Randomized placements per scene")
      ->check(CLI::PositiveNumber);
  aug->add_option("--seed", seed, "Base seed");
  aug->add_option("--threads", threads, "Worker threads");
  aug->add_option("--out", aug_out, "Output directory");
  aug->add_option("--name", aug_name, "Manifest base name (default: structure id)");
  aug->add_option("--scene-dir", scene_dir, "Directory for scene ids");
  aug->callback([&] {
    action = [&] {
      const auto structure = load_structure_file(structure_path);
      std::vector<Scene> loaded;
      AugmentInputs inputs{structure_path, {}, placements, seed};
      for (const auto& s : scenes) {
        loaded.push_back(resolve_scene(s, scene_dir));
        inputs.scene_ids.push_back(loaded.back().id);
      }
      const auto reports = augment_batch(structure, loaded, placements, seed, threads);
      const std::string name = aug_name.empty() ? structure_id(structure) : aug_name;
      const auto path = write_augmentation(aug_out, name, inputs, reports);
      std::size_t ok = 0;
      for (const auto& r : reports) ok += r.success;
      out << reports.size() << " reports (" << ok << " success, "
          << reports.size() - ok << " failure) -> " << path.string() << "\n";
      return 0;
    };
  });

  // stats
  auto* st = app.add_subcommand("stats", "Aggregate statistics of a dataset");
  std::string root;
  bool as_json = false;
  st->add_option("root", root, "Dataset root")->required();
  st->add_flag("--json", as_json, "Machine-readable output");
  st->callback([&] {
    action = [&] {
      const auto stats = compute_stats(root);
      if (as_json)
        out << stats_to_json(stats).dump(2) << "\n";
      else
        out << stats_table_text(stats);
      return 0;
    };
  });

  // list
  auto* ls = app.add_subcommand("list", "List dataset instances");
  std::string f_task, f_category, f_origin;
  ls->add_option("root", root, "Dataset root")->required();
  ls->add_option("--task", f_task, "Task name");
  ls->add_option("--category", f_category, "Scene category");
  ls->add_option("--origin", f_origin, "Human or Augmented");
  ls->callback([&] {
    action = [&] {
      InstanceFilter filter;
      if (!f_task.empty()) filter.task = f_task;
      if (!f_category.empty()) {
        filter.category = parse_category(f_category);
        if (!filter.category) throw CLI::ValidationError("--category", "unknown category " + f_category);
      }
      if (!f_origin.empty()) {
        filter.origin = parse_origin(f_origin);
        if (!filter.origin) throw CLI::ValidationError("--origin", "unknown origin " + f_origin);
      }
      for (const auto& e : list_instances(root, filter))
        out << to_string(e.category) << "\t" << e.task << "\t" << e.id << "\t"
            << to_string(e.origin) << "\t" << e.scene_id << "\n";
      return 0;
    };
  });

  // validate
  auto* val = app.add_subcommand("validate", "Check a scene, structure or trace document");
  std::string doc_path, against;
  val->add_option("file", doc_path, "Document to check")->required();
  val->add_option("--scene", against, "Scene to check a structure against");
  val->add_option("--scene-dir", scene_dir, "Directory for scene ids");
  val->callback([&] {
    action = [&] { return cmd_validate(doc_path, against, scene_dir, out, err); };
  });

  // check
  auto* chk = app.add_subcommand("check", "Replay a structure and evaluate its goal");
  chk->add_option("structure", structure_path, "Task structure (.hts.json)")->required();
  chk->add_option("--scene", scene_arg, "Scene (default: the structure's own)");
  chk->add_option("--scene-dir", scene_dir, "Directory for scene ids");
  chk->callback([&] {
    action = [&] {
      const auto s = load_structure_file(structure_path);
      const Scene scene = resolve_scene(scene_arg.empty() ? s.scene_id : scene_arg, scene_dir);
      const auto res = replay(scene, flatten(s));
      out << res.digest << "\n";
      int status = 0;
      for (const auto& ev : res.state.events) {
        if (ev.ok()) continue;
        out << "failed: " << ev.action.label() << " (" << to_string(*ev.failure) << ")\n";
        status = 1;
      }
      if (!s.goal_spec) {
        out << "no goal specification\n";
        return 1;
      }
      const auto report = check_goal(res.state, *s.goal_spec);
      for (const auto& p : report.predicates)
        out << (p.holds ? "holds: " : "unmet: ") << p.predicate << "\n";
      return report.satisfied ? status : 1;
    };
  });

  // import
  auto* imp = app.add_subcommand("import", "Store a structure and trace as a dataset instance");
  std::string imp_trace, imp_task, imp_id, imp_origin = "Human";
  bool imp_frames = false;
  imp->add_option("root", root, "Dataset root")->required();
  imp->add_option("structure", structure_path, "Task structure (.hts.json)")->required();
  imp->add_option("--scene", scene_arg, "Scene (default: the structure's own)");
  imp->add_option("--trace", imp_trace, "Trace (default: the flattened structure)");
  imp->add_option("--task", imp_task, "Task name (default: the goal text)");
  imp->add_option("--id", imp_id, "Instance id (default: content hash)");
  imp->add_option("--origin", imp_origin, "Human or Augmented");
  imp->add_flag("--frames", imp_frames, "Render and store the episode");
  imp->add_option("--scene-dir", scene_dir, "Directory for scene ids");
  imp->callback([&] {
    action = [&] {
      const auto s = load_structure_file(structure_path);
      const Scene scene = resolve_scene(scene_arg.empty() ? s.scene_id : scene_arg, scene_dir);
      const Trace trace = imp_trace.empty() ? flatten(s) : load_trace_file(imp_trace);
      SaveOptions opts;
      if (!imp_task.empty()) opts.task = imp_task;
      if (!imp_id.empty()) opts.id = imp_id;
      const auto origin = parse_origin(imp_origin);
      if (!origin) throw CLI::ValidationError("--origin", "unknown origin " + imp_origin);
      opts.origin = *origin;
      std::vector<FrameBundle> frames;
      if (imp_frames) {
        frames = render_episode(scene, trace);
        opts.frames = &frames;
      }
      out << save_instance(root, scene, s, trace, opts) << "\n";
      return 0;
    };
  });

  // actions
  auto* acts = app.add_subcommand("actions", "Print the action semantics table");
  acts->callback([&] {
    action = [&] {
      out << action_semantics_document().dump(2) << "\n";
      return 0;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    return action();
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace taskgrid
