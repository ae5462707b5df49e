#include "taskgrid/augment.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <thread>

#include "taskgrid/digest.hpp"
#include "taskgrid/netpbm.hpp"

namespace taskgrid {

std::optional<int> approach_distance(const DistanceMap& map, Cell cell) {
  if (auto d = map.at(cell)) return d;
  std::optional<int> best;
  for (Cell step : kNeighbourOrder) {
    auto d = map.at(cell + step);
    if (d && (!best || *d + 1 < *best)) best = *d + 1;
  }
  return best;
}

std::string match_object(const std::string& object_class, const Scene& target) {
  const OccupancyGrid grid = occupancy_grid(target);
  const DistanceMap map = bfs_reachability(grid, target.agent_start.cell);
  const ObjectInstance* best = nullptr;
  long best_dist = 0;
  for (const auto& obj : target.objects) {
    if (obj.object_class != object_class) continue;
    const auto d = approach_distance(map, obj.cell);
    const long dist = d ? *d : std::numeric_limits<long>::max();
    if (!best || dist < best_dist) {
      best = &obj;
      best_dist = dist;
    }
  }
  if (!best) throw NoSuchClass(object_class);
  return best->id;
}

std::vector<AgentPose> interaction_poses(const EnvState& env,
                                         const std::string& object_id) {
  std::vector<AgentPose> poses;
  const ObjectDynamics* dyn = env.dynamics(object_id);
  if (!dyn || !dyn->cell) return poses;
  const Cell target = *dyn->cell;
  const DistanceMap map = bfs_reachability(*env.grid, env.agent.cell);
  EnvState probe = env;
  probe.events.clear();
  for (int heading = 0; heading < 360; heading += 90) {
    const Cell dir = heading_step(heading);
    for (int k = 1; k <= kInteractionRange; ++k) {
      const Cell stand{target.x - k * dir.x, target.z - k * dir.z};
      if (!map.contains(stand)) continue;
      probe.agent = {stand, heading, env.agent.pitch};
      if (!reach_check(probe, target)) poses.push_back(probe.agent);
    }
  }
  std::sort(poses.begin(), poses.end());
  return poses;
}

std::vector<AgentPose> interaction_poses(const Scene& scene,
                                         const std::string& object_id) {
  return interaction_poses(init_env(scene), object_id);
}

std::string_view to_string(RetargetFailure f) {
  switch (f) {
    case RetargetFailure::NoSuchClass: return "NoSuchClass";
    case RetargetFailure::Unreachable: return "Unreachable";
    case RetargetFailure::InteractionFailed: return "InteractionFailed";
    case RetargetFailure::GoalUnsatisfied: return "GoalUnsatisfied";
    case RetargetFailure::MissingGoalSpec: return "MissingGoalSpec";
    case RetargetFailure::PlacementInfeasible: return "PlacementInfeasible";
  }
  return "?";
}

std::string structure_id(const HierarchicalTaskStructure& s) {
  return sha256_hex(serialize_structure(s)).substr(0, 16);
}

namespace {

struct Failed {
  RetargetFailure reason;
  std::string detail;
};

class Retargeter {
 public:
  explicit Retargeter(const Scene& target)
      : scene_(target), env_(init_env(target)) {}

  /// Emits navigation and the remapped interaction; returns a failure or
  /// nothing.
  std::optional<Failed> handle(const RecordedAction& ra) {
    const AtomicAction& a = ra.action;
    if (!a.target) return untargeted(a);

    std::string cls;
    if (ra.target_class) {
      cls = *ra.target_class;
    } else if (const ObjectInstance* same = scene_.find(*a.target)) {
      cls = same->object_class;
    } else {
      return Failed{RetargetFailure::NoSuchClass,
                    "no class recorded for '" + *a.target + "'"};
    }
    std::string mapped;
    if (auto it = matches_.find(*a.target); it != matches_.end()) {
      mapped = it->second;
    } else {
      try {
        mapped = match_object(cls, scene_);
      } catch (const NoSuchClass& e) {
        return Failed{RetargetFailure::NoSuchClass, e.what()};
      }
      matches_.emplace(*a.target, mapped);
    }

    const auto poses = interaction_poses(env_, mapped);
    if (poses.empty())
      return Failed{RetargetFailure::Unreachable,
                    "no interaction pose for '" + mapped + "'"};
    const DistanceMap map = bfs_reachability(*env_.grid, env_.agent.cell);
    const AgentPose* best = nullptr;
    int best_d = 0;
    for (const auto& p : poses) {
      const int d = *map.at(p.cell);
      if (!best || d < best_d) {  // poses are already (cell, heading) sorted
        best = &p;
        best_d = d;
      }
    }

    std::vector<Cell> path{env_.agent.cell};
    const Cell goal[] = {best->cell};
    for (Cell c : shortest_path(*env_.grid, env_.agent.cell, goal))
      path.push_back(c);
    if (auto f = navigate(path_to_actions(path, env_.agent.heading))) return f;

    const auto idx = *scene_.index_of(mapped);
    const ObjectDynamics& dyn = env_.objects[idx];
    const int focus = support_height_mm(env_, idx) +
                      scene_.objects[idx].height_mm / 2;
    if (auto f = navigate(refocus(env_.agent, *dyn.cell, focus,
                                  scene_.cell_size_mm)))
      return f;

    return interact(AtomicAction{a.kind, mapped});
  }

  const Trace& trace() const { return trace_; }
  std::size_t inserted() const { return inserted_; }

 private:
  std::optional<Failed> navigate(const std::vector<AtomicAction>& actions) {
    for (const auto& a : actions) {
      const Event& ev = apply_action(env_, a);
      trace_.push_back(a);
      ++inserted_;
      if (!ev.ok())
        return Failed{RetargetFailure::Unreachable,
                      "synthesized " + a.label() + " failed: " +
                          std::string(to_string(*ev.failure))};
    }
    return std::nullopt;
  }

  std::optional<Failed> interact(const AtomicAction& a) {
    const Event& ev = apply_action(env_, a);
    trace_.push_back(a);
    if (!ev.ok())
      return Failed{RetargetFailure::InteractionFailed,
                    a.label() + " failed: " + std::string(to_string(*ev.failure))};
    return std::nullopt;
  }

  /// Drop or untargeted Put: turn toward the first heading (fewest
  /// rotations, right before left) whose facing cell accepts the object.
  std::optional<Failed> untargeted(const AtomicAction& a) {
    static const std::vector<std::vector<AtomicAction>> kTurns = {
        {},
        {{ActionKind::RotateRight, {}}},
        {{ActionKind::RotateLeft, {}}},
        {{ActionKind::RotateRight, {}}, {ActionKind::RotateRight, {}}},
    };
    for (const auto& turns : kTurns) {
      EnvState probe = env_;
      bool ok = true;
      for (const auto& t : turns) ok = ok && apply_action(probe, t).ok();
      if (ok && apply_action(probe, a).ok()) {
        if (auto f = navigate(turns)) return f;
        return interact(a);
      }
    }
    return interact(a);
  }

  const Scene& scene_;
  EnvState env_;
  std::map<std::string, std::string> matches_;
  Trace trace_;
  std::size_t inserted_ = 0;
};

void finish(RetargetReport& r, const Scene& scene) {
  r.final_digest = replay(scene, r.trace).digest;
}

RetargetReport retarget_placed(const HierarchicalTaskStructure& structure,
                               const Scene& target, RetargetReport r) {
  r.target_scene = target.id;
  if (!structure.goal_spec) {
    r.failure = RetargetFailureInfo{0, 0, RetargetFailure::MissingGoalSpec,
                                    "structure has no goal specification"};
    finish(r, target);
    return r;
  }

  Retargeter rt(target);
  std::size_t action_index = 0;
  for (std::size_t si = 0; si < structure.steps.size(); ++si) {
    for (const auto& ra : structure.steps[si].actions) {
      if (ra.failed()) continue;
      const std::size_t ai = action_index++;
      if (!ra.action.is_interaction()) continue;
      if (auto f = rt.handle(ra)) {
        r.trace = rt.trace();
        r.inserted_nav_actions = rt.inserted();
        r.failure = RetargetFailureInfo{si, ai, f->reason, std::move(f->detail)};
        finish(r, target);
        return r;
      }
    }
  }
  r.trace = rt.trace();
  r.inserted_nav_actions = rt.inserted();

  // Independent check: fresh replay, no failed interactions, goal holds.
  ReplayResult res = replay(target, r.trace);
  r.final_digest = res.digest;
  const std::size_t last_step =
      structure.steps.empty() ? 0 : structure.steps.size() - 1;
  for (const auto& ev : res.state.events) {
    if (!ev.ok() && ev.action.is_interaction()) {
      r.failure = RetargetFailureInfo{last_step, action_index,
                                      RetargetFailure::InteractionFailed,
                                      ev.action.label() + " failed on replay"};
      return r;
    }
  }
  try {
    const GoalReport g = check_goal(res.state, *structure.goal_spec);
    if (!g.satisfied) {
      std::string unmet;
      for (const auto& p : g.predicates)
        if (!p.holds) unmet += (unmet.empty() ? "" : "; ") + p.predicate;
      r.failure = RetargetFailureInfo{last_step, action_index,
                                      RetargetFailure::GoalUnsatisfied,
                                      "unmet: " + unmet};
      return r;
    }
  } catch (const UnknownObjectClass& e) {
    r.failure = RetargetFailureInfo{last_step, action_index,
                                    RetargetFailure::GoalUnsatisfied, e.what()};
    return r;
  }
  r.success = true;
  return r;
}

}  // namespace

RetargetReport retarget(const HierarchicalTaskStructure& structure,
                        const Scene& target) {
  RetargetReport r;
  r.source_structure = structure_id(structure);
  return retarget_placed(structure, target, std::move(r));
}

std::vector<RetargetReport> augment_batch(
    const HierarchicalTaskStructure& structure, const std::vector<Scene>& scenes,
    std::size_t placements_per_scene, std::uint64_t seed, unsigned threads) {
  const std::size_t total = scenes.size() * placements_per_scene;
  std::vector<RetargetReport> reports(total);
  const std::string sid = structure_id(structure);

  auto run = [&](std::size_t job) {
    const std::size_t si = job / placements_per_scene;
    const std::size_t pi = job % placements_per_scene;
    RetargetReport r;
    r.source_structure = sid;
    r.target_scene = scenes[si].id;
    r.placement_index = pi;
    r.placement_seed = placement_seed(seed, si, pi);
    try {
      const Scene placed = randomize_placements(scenes[si], r.placement_seed);
      reports[job] = retarget_placed(structure, placed, std::move(r));
    } catch (const PlacementInfeasible& e) {
      r.failure = RetargetFailureInfo{0, 0, RetargetFailure::PlacementInfeasible,
                                      e.what()};
      reports[job] = std::move(r);
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(threads, total));
  if (n <= 1) {
    for (std::size_t j = 0; j < total; ++j) run(j);
    return reports;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t)
    pool.emplace_back([&] {
      for (std::size_t j; (j = next.fetch_add(1)) < total;) run(j);
    });
  for (auto& th : pool) th.join();
  return reports;
}

Json report_to_json(const RetargetReport& r) {
  Json j;
  j["source_structure"] = r.source_structure;
  j["target_scene"] = r.target_scene;
  j["placement_index"] = r.placement_index;
  j["placement_seed"] = r.placement_seed;
  j["outcome"] = r.success ? "Success" : "Failure";
  j["final_digest"] = r.final_digest;
  j["inserted_nav_actions"] = r.inserted_nav_actions;
  j["trace"] = trace_to_json(r.trace);
  if (r.failure) {
    j["failure"] = {{"step_index", r.failure->step_index},
                    {"action_index", r.failure->action_index},
                    {"reason", std::string(to_string(r.failure->reason))},
                    {"detail", r.failure->detail}};
  } else {
    j["failure"] = nullptr;
  }
  return j;
}

std::filesystem::path write_augmentation(const std::filesystem::path& out_dir,
                                         const std::string& name,
                                         const AugmentInputs& inputs,
                                         const std::vector<RetargetReport>& reports) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Json doc;
  doc["aug_version"] = 1;
  doc["inputs"] = {{"structure", inputs.structure_path},
                   {"scenes", inputs.scene_ids},
                   {"placements_per_scene", inputs.placements_per_scene}};
  doc["seed"] = inputs.seed;
  doc["report_count"] = reports.size();
  Json records = Json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    Json rec = report_to_json(r);
    rec.erase("trace");
    rec["trace_length"] = r.trace.size();
    if (r.success) {
      std::string idx = std::to_string(i);
      idx.insert(0, idx.size() < 3 ? 3 - idx.size() : 0, '0');
      const std::string file = name + "." + idx + ".trace.json";
      netpbm::write_file((out_dir / file).string(), serialize_trace(r.trace));
      rec["trace_file"] = file;
    } else {
      rec["trace_file"] = nullptr;
    }
    records.push_back(std::move(rec));
  }
  doc["reports"] = std::move(records);
  const auto path = out_dir / (name + ".aug.json");
  netpbm::write_file(path.string(), doc.dump(2) + "\n");
  return path;
}

}  // namespace taskgrid
