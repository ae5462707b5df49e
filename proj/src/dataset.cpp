#include "taskgrid/dataset.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include "taskgrid/detail/json_util.hpp"
#include "taskgrid/digest.hpp"
#include "taskgrid/netpbm.hpp"

namespace taskgrid {

using detail::get_string;
using detail::optional_field;
using detail::require;

std::string_view to_string(Origin o) {
  return o == Origin::Human ? "Human" : "Augmented";
}

std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "Human") return Origin::Human;
  if (s == "Augmented") return Origin::Augmented;
  return std::nullopt;
}

std::string task_slug(std::string_view task) {
  std::string out;
  bool dash = false;
  for (char ch : task) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      if (dash && !out.empty()) out += '-';
      out += static_cast<char>(std::tolower(c));
      dash = false;
    } else {
      dash = true;
    }
  }
  return out.empty() ? "task" : out;
}

namespace {

std::function<void()>& rename_hook() {
  static std::function<void()> hook;
  return hook;
}

/// Advisory single-writer lock on root/.lock; the in-process mutex covers
/// threads, flock covers other processes.
class WriterLock {
 public:
  explicit WriterLock(const fs::path& root) : guard_(mutex()) {
    const auto path = (root / ".lock").string();
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open " + path + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw IoError("cannot lock " + path + ": " + std::strerror(errno));
    }
  }
  ~WriterLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  WriterLock(const WriterLock&) = delete;
  WriterLock& operator=(const WriterLock&) = delete;

 private:
  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }
  std::lock_guard<std::mutex> guard_;
  int fd_ = -1;
};

Json entry_to_json(const InstanceEntry& e) {
  Json j;
  j["id"] = e.id;
  j["task"] = e.task;
  j["category"] = std::string(to_string(e.category));
  j["scene_id"] = e.scene_id;
  j["annotator_id"] = e.annotator_id;
  j["origin"] = std::string(to_string(e.origin));
  j["structure"] = e.structure_path;
  j["trace"] = e.trace_path;
  j["frames"] = e.frames_path ? Json(*e.frames_path) : Json(nullptr);
  return j;
}

InstanceEntry entry_from_json(const Json& j, const std::string& path) {
  InstanceEntry e;
  e.id = get_string(j, "id", path);
  e.task = get_string(j, "task", path);
  const auto cat = get_string(j, "category", path);
  auto c = parse_category(cat);
  if (!c) throw ParseError(detail::join_path(path, "category"), "unknown category " + cat);
  e.category = *c;
  e.scene_id = get_string(j, "scene_id", path);
  e.annotator_id = get_string(j, "annotator_id", path);
  const auto org = get_string(j, "origin", path);
  auto o = parse_origin(org);
  if (!o) throw ParseError(detail::join_path(path, "origin"), "unknown origin " + org);
  e.origin = *o;
  e.structure_path = get_string(j, "structure", path);
  e.trace_path = get_string(j, "trace", path);
  if (const Json* f = optional_field(j, "frames"))
    e.frames_path = detail::as_string(*f, detail::join_path(path, "frames"));
  return e;
}

Json manifest_to_json(const DatasetManifest& m) {
  Json j;
  j["manifest_version"] = kManifestVersion;
  Json arr = Json::array();
  for (const auto& e : m.instances) arr.push_back(entry_to_json(e));
  j["instances"] = std::move(arr);
  return j;
}

void write_synced(const fs::path& path, const std::string& bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw IoError("write failed for " + path.string() + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0)
    throw IoError("sync failed for " + path.string());
}

void write_manifest(const fs::path& root, const DatasetManifest& m) {
  const fs::path tmp = root / "manifest.json.tmp";
  write_synced(tmp, manifest_to_json(m).dump(2) + "\n");
  if (auto& hook = rename_hook()) hook();
  std::error_code ec;
  fs::rename(tmp, root / kManifestFile, ec);
  if (ec) throw IoError("cannot replace manifest: " + ec.message());
  // Make the rename itself durable.
  const int dfd = ::open(root.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

}  // namespace

namespace detail {
void set_before_manifest_rename(std::function<void()> hook) {
  rename_hook() = std::move(hook);
}
}  // namespace detail

DatasetManifest read_manifest(const fs::path& root) {
  const fs::path path = root / kManifestFile;
  DatasetManifest m;
  if (!fs::exists(path)) return m;
  try {
    const Json doc = detail::parse_json(netpbm::read_file(path.string()), "manifest");
    detail::check_version(doc, "manifest_version", kManifestVersion);
    const Json& arr = detail::as_array(require(doc, "instances"), "instances");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto e = entry_from_json(arr[i], "instances[" + std::to_string(i) + "]");
      if (!seen.insert(e.id).second)
        throw CorruptManifest("duplicate instance id '" + e.id + "'");
      m.instances.push_back(std::move(e));
    }
  } catch (const ParseError& e) {
    throw CorruptManifest(std::string("corrupt manifest: ") + e.what());
  } catch (const IoError& e) {
    throw CorruptManifest(std::string("unreadable manifest: ") + e.what());
  }
  return m;
}

std::string save_instance(const fs::path& root, const Scene& scene,
                          const HierarchicalTaskStructure& structure,
                          const Trace& trace, const SaveOptions& options) {
  ensure_dir(root);
  WriterLock lock(root);
  DatasetManifest m = read_manifest(root);

  const std::string structure_doc = serialize_structure(structure);
  const std::string trace_doc = serialize_trace(trace);
  const std::string task = options.task.value_or(structure.goal);
  std::string id = options.id.value_or(
      sha256_hex(scene.id + "\n" + std::string(to_string(options.origin)) +
                 "\n" + structure_doc + trace_doc)
          .substr(0, 12));
  if (id.empty() || id.find('/') != std::string::npos || id == "." || id == "..")
    throw std::invalid_argument("bad instance id '" + id + "'");
  for (const auto& e : m.instances)
    if (e.id == id) throw DuplicateId(id);

  const fs::path rel = fs::path(std::string(to_string(scene.category))) /
                       task_slug(task) / id;
  const fs::path dir = root / rel;
  // A directory without a manifest entry is debris from an interrupted save.
  std::error_code ec;
  fs::remove_all(dir, ec);
  ensure_dir(dir);

  InstanceEntry e;
  e.id = id;
  e.task = task;
  e.category = scene.category;
  e.scene_id = scene.id;
  e.annotator_id = structure.annotator_id;
  e.origin = options.origin;
  e.structure_path = (rel / "structure.hts.json").generic_string();
  e.trace_path = (rel / "trace.trace.json").generic_string();
  netpbm::write_file((root / e.structure_path).string(), structure_doc);
  netpbm::write_file((root / e.trace_path).string(), trace_doc);
  if (options.frames) {
    e.frames_path = (rel / "frames").generic_string();
    encode_frames(*options.frames, root / *e.frames_path, scene, trace);
  }
  // Sidecar lets the tree be recounted without the manifest.
  Json sidecar = entry_to_json(e);
  netpbm::write_file((dir / "instance.json").string(), sidecar.dump(2) + "\n");

  m.instances.push_back(e);
  write_manifest(root, m);
  return id;
}

LoadedInstance load_instance(const fs::path& root, const std::string& id) {
  const DatasetManifest m = read_manifest(root);
  for (const auto& e : m.instances) {
    if (e.id != id) continue;
    LoadedInstance out{e, load_structure_file((root / e.structure_path).string()),
                       load_trace_file((root / e.trace_path).string())};
    return out;
  }
  throw Error("no instance '" + id + "' in " + root.string());
}

std::vector<InstanceEntry> list_instances(const fs::path& root,
                                          const InstanceFilter& filter) {
  std::vector<InstanceEntry> out;
  for (auto& e : read_manifest(root).instances) {
    if (filter.task && e.task != *filter.task) continue;
    if (filter.category && e.category != *filter.category) continue;
    if (filter.origin && e.origin != *filter.origin) continue;
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.category, a.task, a.id) < std::tie(b.category, b.task, b.id);
  });
  return out;
}

std::vector<std::string> verify(const fs::path& root) {
  std::vector<std::string> problems;
  DatasetManifest m;
  try {
    m = read_manifest(root);
  } catch (const CorruptManifest& e) {
    problems.push_back(e.what());
    return problems;
  }
  for (const auto& e : m.instances) {
    auto check = [&](const std::string& rel, bool dir) {
      const fs::path p = root / rel;
      if (dir ? !fs::is_directory(p) : !fs::is_regular_file(p))
        problems.push_back(e.id + ": missing " + rel);
    };
    check(e.structure_path, false);
    check(e.trace_path, false);
    if (e.frames_path) check(*e.frames_path, true);
  }
  return problems;
}

long mean_tenths(std::size_t sum, std::size_t n) {
  if (n == 0) return 0;
  return static_cast<long>((20 * sum + n) / (2 * n));
}

std::string format_tenths(long tenths) {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

long StatsRow::avg_descriptions_tenths() const {
  return mean_tenths(total_descriptions, num_instances);
}

long StatsRow::avg_atomic_actions_tenths() const {
  return mean_tenths(total_atomic_actions, num_instances);
}

namespace {
constexpr SceneCategory kTableOrder[] = {
    SceneCategory::LivingRoom, SceneCategory::Bedroom, SceneCategory::Bathroom,
    SceneCategory::Kitchen};
}

StatsTable tabulate(const std::vector<InstanceFigures>& rows) {
  StatsTable t;
  t.total.label = "Total";
  for (SceneCategory c : kTableOrder) {
    StatsRow r;
    r.label = std::string(to_string(c));
    std::set<std::string> tasks;
    for (const auto& f : rows) {
      if (f.category != c) continue;
      tasks.insert(f.task);
      ++r.num_instances;
      r.total_descriptions += f.descriptions;
      r.total_atomic_actions += f.atomic_actions;
    }
    r.num_tasks = tasks.size();
    t.total.num_tasks += r.num_tasks;
    t.total.num_instances += r.num_instances;
    t.total.total_descriptions += r.total_descriptions;
    t.total.total_atomic_actions += r.total_atomic_actions;
    t.categories.push_back(std::move(r));
  }
  return t;
}

DatasetStats compute_stats(const fs::path& root) {
  std::vector<InstanceFigures> human, augmented;
  for (const auto& e : read_manifest(root).instances) {
    HierarchicalTaskStructure s;
    try {
      s = load_structure_file((root / e.structure_path).string());
    } catch (const Error& err) {
      throw CorruptManifest("instance " + e.id + ": " + err.what());
    }
    const StructureStats st = structure_stats(s);
    InstanceFigures f{e.category, e.task, st.num_steps, st.num_atomic_actions};
    (e.origin == Origin::Human ? human : augmented).push_back(f);
  }
  return {tabulate(human), tabulate(augmented)};
}

namespace {

std::string pad(const std::string& s, std::size_t w, bool left) {
  if (s.size() >= w) return s;
  const std::string fill(w - s.size(), ' ');
  return left ? s + fill : fill + s;
}

void table_text(std::ostringstream& os, const char* title, const StatsTable& t) {
  os << title << "\n";
  os << pad("Category", 12, true) << pad("Tasks", 7, false)
     << pad("Instances", 11, false) << pad("Avg. descriptions", 19, false)
     << pad("Avg. atomic actions", 21, false) << "\n";
  auto row = [&](const StatsRow& r) {
    os << pad(r.label, 12, true) << pad(std::to_string(r.num_tasks), 7, false)
       << pad(std::to_string(r.num_instances), 11, false)
       << pad(format_tenths(r.avg_descriptions_tenths()), 19, false)
       << pad(format_tenths(r.avg_atomic_actions_tenths()), 21, false) << "\n";
  };
  for (const auto& r : t.categories) row(r);
  row(t.total);
}

Json row_json(const StatsRow& r) {
  return {{"label", r.label},
          {"num_tasks", r.num_tasks},
          {"num_instances", r.num_instances},
          {"avg_task_descriptions", r.avg_descriptions_tenths() / 10.0},
          {"avg_atomic_actions", r.avg_atomic_actions_tenths() / 10.0}};
}

Json table_json(const StatsTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.categories) rows.push_back(row_json(r));
  return {{"categories", rows}, {"total", row_json(t.total)}};
}

}  // namespace

std::string stats_table_text(const DatasetStats& s) {
  std::ostringstream os;
  table_text(os, "Human", s.human);
  os << "\n";
  table_text(os, "Augmented", s.augmented);
  return os.str();
}

Json stats_to_json(const DatasetStats& s) {
  return {{"stats_version", 1},
          {"human", table_json(s.human)},
          {"augmented", table_json(s.augmented)}};
}

}  // namespace taskgrid
