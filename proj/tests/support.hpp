#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "taskgrid/env.hpp"
#include "taskgrid/task_record.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path data_dir() { return TASKGRID_DATA_DIR; }

inline taskgrid::Scene bundled_scene(const std::string& id) {
  return taskgrid::load_scene_file(
      (data_dir() / "scenes" / (id + ".scene.json")).string());
}

inline taskgrid::HierarchicalTaskStructure coffee_structure() {
  return taskgrid::load_structure_file(
      (data_dir() / "tasks" / "coffee.hts.json").string());
}

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("taskgrid_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// Uniformly random action over the whole vocabulary; targets drawn from the
/// scene's ids plus one unknown id.
inline taskgrid::AtomicAction random_action(std::mt19937_64& rng,
                                            const taskgrid::Scene& scene) {
  using namespace taskgrid;
  const auto kind = kAllActionKinds[rng() % std::size(kAllActionKinds)];
  AtomicAction a{kind, {}};
  const auto rule = action_spec(kind).target;
  if (rule == TargetRule::None) return a;
  if (rule == TargetRule::Optional && rng() % 3 == 0) return a;
  const std::size_t pick = rng() % (scene.objects.size() + 1);
  a.target = pick < scene.objects.size() ? scene.objects[pick].id : "Ghost_1";
  return a;
}

/// Movement-heavy random trace: interactions are rare without bias, so
/// half the draws are moves and rotations.
inline taskgrid::Trace random_trace(std::mt19937_64& rng,
                                    const taskgrid::Scene& scene,
                                    std::size_t length) {
  using namespace taskgrid;
  Trace t;
  for (std::size_t i = 0; i < length; ++i) {
    if (rng() % 2 == 0) {
      static constexpr ActionKind kMoves[] = {
          ActionKind::MoveAhead, ActionKind::MoveAhead, ActionKind::RotateLeft,
          ActionKind::RotateRight};
      t.push_back({kMoves[rng() % 4], {}});
    } else {
      t.push_back(random_action(rng, scene));
    }
  }
  return t;
}

}  // namespace testsupport
