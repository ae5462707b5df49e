#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"
#include "taskgrid/cli.hpp"
#include "taskgrid/dataset.hpp"

using namespace taskgrid;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Runs the installed binary in a child process.
Run spawn(const std::string& args) {
  const std::string cmd = std::string(TASKGRID_CLI_BINARY) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, ""};
}

std::string data(const std::string& rel) { return (testsupport::data_dir() / rel).string(); }

/// Writes the flattened coffee fixture as a trace file.
std::string coffee_trace(const fs::path& dir) {
  const auto p = dir / "coffee.trace.json";
  std::ofstream(p) << serialize_trace(flatten(testsupport::coffee_structure()));
  return p.string();
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 2);  // a subcommand is required
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"replay"}).code == 2);
  CHECK(cli({"augment", data("tasks/coffee.hts.json"), "--scenes", "kitchen_02",
             "--placements", "0"})
            .code == 2);
  const Run missing = cli({"replay", "kitchen_01", "/nonexistent/trace.json"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error:") != std::string::npos);
  CHECK(cli({"replay", "no_such_scene", data("tasks/coffee.hts.json")}).code == 1);
}

TEST_CASE("replay prints the digest, identical across runs and processes") {
  testsupport::TempDir dir;
  const std::string trace = coffee_trace(dir.path());
  const Run a = cli({"replay", "kitchen_01", trace});
  const Run b = cli({"replay", data("scenes/kitchen_01.scene.json"), trace});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const Scene s = testsupport::bundled_scene("kitchen_01");
  CHECK(a.out == replay(s, flatten(testsupport::coffee_structure())).digest + "\n");
  const Run p1 = spawn("replay kitchen_01 " + trace);
  const Run p2 = spawn("replay kitchen_01 " + trace);
  CHECK(p1.code == 0);
  CHECK(p1.out == a.out);
  CHECK(p2.out == a.out);
}

TEST_CASE("golden digests of the bundled fixtures") {
  // Frozen values; a change means stored datasets no longer replay to the
  // digests they were saved with.
  const std::pair<const char*, const char*> golden[] = {
      {"coffee.hts.json", "32dd9042311d7235314316cdcecdb5a0b1d76d98aab814c5c8fd141c4c8a50f2"},
      {"coffee_kitchen_02.hts.json", "ae5c647b003b1acd31ae2483b21a8823090a6d475f0d6f1dc01daa8e39b022c7"},
      {"egg_kitchen_03.hts.json", "8197cb30fdd1f2e5d8433c6780b905855fd86cecd4ec53912185fe28883f2c35"},
      {"faucet_bathroom_01.hts.json", "4b59e29b4b6f3ff2d0b516b8eea412b659b6cd2480eb9e3e55850882ab789cce"},
      {"soap_bathroom_02.hts.json", "a78154f5599f63d9333f2502fb61d375dd03839f8facdae846a48ebbf9e5f8aa"},
  };
  for (const auto& [file, digest] : golden) {
    const Run r = cli({"check", data(std::string("tasks/") + file)});
    INFO(file);
    CHECK(r.code == 0);
    CHECK(r.out.substr(0, 64) == digest);
  }
}

TEST_CASE("check reports unmet goals with exit code 1") {
  const Run r = cli({"check", data("tasks/coffee.hts.json"), "--scene", "kitchen_02"});
  CHECK(r.code == 1);
  CHECK(r.out.find("unmet:") != std::string::npos);
}

TEST_CASE("render writes four rasters per frame and a manifest") {
  testsupport::TempDir dir;
  const std::string trace = coffee_trace(dir.path());
  const Run r = cli({"render", "kitchen_01", trace, (dir.path() / "frames").string(),
                     "--width", "24", "--height", "16"});
  REQUIRE(r.code == 0);
  const std::size_t n = flatten(testsupport::coffee_structure()).size() + 1;
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path() / "frames")) ++files;
  CHECK(r.out.find(std::to_string(n) + " frames, " + std::to_string(files) + " files") == 0);
  CHECK(files >= 4 * n);
  CHECK(cli({"render", "kitchen_01", trace, (dir.path() / "x").string(), "--width", "2"}).code == 1);
}

TEST_CASE("augment writes one report per scene and placement") {
  testsupport::TempDir dir;
  std::vector<std::string> args{"augment", data("tasks/coffee.hts.json"), "--scenes"};
  for (int i = 1; i <= 10; ++i)
    args.push_back(i < 10 ? "kitchen_0" + std::to_string(i) : "kitchen_10");
  for (std::string extra : {"--placements", "5", "--seed", "7", "--threads", "2", "--out"})
    args.push_back(extra);
  args.push_back(dir.path().string());
  args.push_back("--name");
  args.push_back("coffee");
  const Run r = cli(args);
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("50 reports") != std::string::npos);
  std::ifstream in(dir.path() / "coffee.aug.json");
  const Json m = Json::parse(in);
  CHECK(m["report_count"] == 50);
  CHECK(m["reports"].size() == 50);
  CHECK(m["inputs"]["placements_per_scene"] == 5);
}

TEST_CASE("stats, list, import and validate") {
  const std::string sample = data("sample_dataset");
  const Run text = cli({"stats", sample});
  REQUIRE(text.code == 0);
  CHECK(text.out.find("Human") != std::string::npos);
  CHECK(text.out.find("20.6") != std::string::npos);
  CHECK(text.out.find("24.0") != std::string::npos);
  const Run js = cli({"stats", sample, "--json"});
  REQUIRE(js.code == 0);
  CHECK(Json::parse(js.out) == stats_to_json(compute_stats(sample)));

  const Run all = cli({"list", sample});
  CHECK(std::count(all.out.begin(), all.out.end(), '\n') == 5);
  const Run kitchen = cli({"list", sample, "--category", "Kitchen"});
  CHECK(std::count(kitchen.out.begin(), kitchen.out.end(), '\n') == 3);
  CHECK(cli({"list", sample, "--origin", "Robot"}).code != 0);

  testsupport::TempDir dir;
  const Run imp = cli({"import", dir.path().string(), data("tasks/egg_kitchen_03.hts.json"),
                       "--id", "egg-1", "--frames"});
  REQUIRE(imp.code == 0);
  CHECK(imp.out == "egg-1\n");
  CHECK(verify(dir.path()).empty());
  CHECK(load_instance(dir.path(), "egg-1").entry.frames_path.has_value());
  CHECK(cli({"import", dir.path().string(), data("tasks/egg_kitchen_03.hts.json"), "--id",
             "egg-1"})
            .code == 1);

  CHECK(cli({"validate", data("scenes/kitchen_01.scene.json")}).code == 0);
  CHECK(cli({"validate", data("tasks/coffee.hts.json"), "--scene", "kitchen_01"}).code == 0);
  CHECK(cli({"validate", data("tasks/coffee.hts.json"), "--scene", "bathroom_01"}).code == 1);
  std::ofstream(dir.path() / "junk.json") << "{\"hello\": 1}";
  CHECK(cli({"validate", (dir.path() / "junk.json").string()}).code == 1);

  const Run acts = cli({"actions"});
  REQUIRE(acts.code == 0);
  CHECK(Json::parse(acts.out) == action_semantics_document());
}
