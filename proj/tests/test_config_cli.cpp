#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "swarmfab/cli.hpp"

using namespace swarmfab;
namespace fs = std::filesystem;

namespace {

const std::string kSamples = SWARMFAB_SAMPLES;

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("swarmfab_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }
  static std::string slurp(const std::string& p) { return cli::read_file(p); }
  fs::path dir;
};

}  // namespace

TEST(Config, RoundTripEveryMorphology) {
  for (auto m : kAllMorphologies) {
    const auto j = config::to_json(config::default_config(m));
    const auto loaded = config::parse(j.dump());
    EXPECT_TRUE(loaded.warnings.empty()) << to_string(m);
    EXPECT_EQ(config::to_json(loaded.config), j) << to_string(m);
    EXPECT_EQ(loaded.config.morphology(), m);
  }
}

TEST(Config, SamplesLoad) {
  for (const char* name : {"bridge_xy.json", "wire2d_wall.json", "wire3d_printer.json", "printer_bridge.json"}) {
    EXPECT_NO_THROW(config::parse(cli::read_file(kSamples + "/" + name))) << name;
  }
}

TEST(Config, Rejections) {
  const auto base = config::to_json(config::default_config(Morphology::BridgeXY));
  auto expect_bad = [](const nlohmann::json& j, const std::string& what) {
    try {
      config::parse(j.dump());
      ADD_FAILURE() << "accepted: " << what;
    } catch (const config::ConfigError&) {
    }
  };
  auto j = base;
  j["colour"] = "red";
  expect_bad(j, "unknown key");
  j = base;
  j.erase("v");
  expect_bad(j, "missing version");
  j = base;
  j["v"] = 2;
  expect_bad(j, "future version");
  j = base;
  j["geometry"]["bridge_span"] = -1;
  expect_bad(j, "negative span");
  j = base;
  j["roster"].erase(2);
  expect_bad(j, "short roster");
  j = base;
  j["roster"][1]["id"] = j["roster"][0]["id"];
  expect_bad(j, "duplicate id");
  j = base;
  j["roster"][0]["id"] = "a b";
  expect_bad(j, "id with space");
  j = base;
  j["morphology"] = "delta";
  expect_bad(j, "unknown morphology");
  EXPECT_THROW(config::parse("{\"v\": 1, \"geometry\": 1e999}"), config::ConfigError);
  EXPECT_THROW(config::parse("not json"), config::ConfigError);
}

TEST(Config, SpareRobotWarns) {
  auto j = config::to_json(config::default_config(Morphology::BridgeXY));
  auto extra = j["roster"][0];
  extra["id"] = "r9";
  j["roster"].push_back(extra);
  const auto loaded = config::parse(j.dump());
  ASSERT_EQ(loaded.warnings.size(), 1u);
  EXPECT_NE(loaded.warnings[0].find("r9"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"machines", "init", "bogus", "/tmp/never_written.json"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"--help"}).code, cli::kOk);
}

TEST(Cli, MachinesList) {
  const auto r = invoke({"machines", "list"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "bridge_xy:3\nwire2d_wall:2\nwire3d_printer:4\nprinter_bridge:4\n");
}

TEST_F(TempDir, MachinesInitWritesLoadableConfig) {
  for (auto m : kAllMorphologies) {
    const auto p = path(std::string(to_string(m)) + ".json");
    ASSERT_EQ(invoke({"machines", "init", to_string(m), p}).code, 0);
    EXPECT_EQ(config::parse(slurp(p)).config.morphology(), m);
  }
}

TEST_F(TempDir, ParseCommand) {
  const auto r = invoke({"parse", kSamples + "/square.gcode"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_EQ(r.out.rfind("travel ", 0), 0u);
  EXPECT_EQ(invoke({"parse", path("missing.gcode")}).code, cli::kIo);
  const auto bad = write("bad.gcode", "G1 X1\nG1 X2\nG1 Q\n");
  const auto e = invoke({"parse", bad});
  EXPECT_EQ(e.code, cli::kGcode);
  EXPECT_NE(e.err.find("line 3"), std::string::npos) << e.err;
}

TEST_F(TempDir, ConfigAndWorkspaceErrors) {
  auto j = config::to_json(config::default_config(Morphology::BridgeXY));
  j["extra"] = 1;
  const auto bad = write("bad.json", j.dump());
  EXPECT_EQ(invoke({"plan", kSamples + "/square.gcode", bad, path("o.txt")}).code, cli::kConfig);
  const auto far = write("far.gcode", "G0 X10 Y10\nG1 X900 E1\n");
  const auto r = invoke({"plan", far, kSamples + "/bridge_xy.json", path("o.txt")});
  EXPECT_EQ(r.code, cli::kKinematics);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  j = config::to_json(config::default_config(Morphology::BridgeXY));
  for (auto& robot : j["roster"]) robot["max_wheel_speed"] = 1e-9;
  const auto slow = write("slow.json", j.dump());
  const auto s = invoke({"plan", kSamples + "/square.gcode", slow, path("o.txt")});
  EXPECT_EQ(s.code, cli::kKinematics);
  EXPECT_NE(s.err.find("TooManyTicks"), std::string::npos) << s.err;
}

TEST_F(TempDir, PlanWritesStream) {
  const auto r = invoke({"plan", kSamples + "/square.gcode", kSamples + "/bridge_xy.json", path("s.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ticks="), std::string::npos);
  const auto stream = slurp(path("s.txt"));
  EXPECT_FALSE(stream.empty());
  EXPECT_EQ(stream.back(), '\n');
}

TEST_F(TempDir, SimulateReportAndBadStep) {
  const auto r = invoke({"simulate", kSamples + "/square.gcode", kSamples + "/bridge_xy.json", "--report"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max_deviation_mm="), std::string::npos);
  EXPECT_NE(r.out.find("extruded_mm=4.000000"), std::string::npos);
  EXPECT_EQ(invoke({"simulate", kSamples + "/square.gcode", kSamples + "/bridge_xy.json", "--dt", "0.5"}).code,
            cli::kUsage);
}

TEST_F(TempDir, SimulateIsByteIdentical) {
  auto j = config::to_json(config::default_config(Morphology::BridgeXY));
  j["sim"]["noise_std"] = 0.01;
  const auto cfg = write("noisy.json", j.dump());
  auto go = [&](const std::string& tag) {
    const auto r = invoke({"simulate", kSamples + "/square.gcode", cfg, "--seed", "42", "--svg", path(tag + ".svg"),
                        "--csv", path(tag + ".csv"), "--stream", path(tag + ".txt")});
    EXPECT_EQ(r.code, 0) << r.err;
  };
  go("a");
  go("b");
  for (const char* ext : {".svg", ".csv", ".txt"}) {
    EXPECT_EQ(slurp(path(std::string("a") + ext)), slurp(path(std::string("b") + ext))) << ext;
  }
}

TEST(Cli, ErrorMapping) {
  std::ostringstream err;
  auto code_of = [&](auto thrower) { return cli::guarded([&]() -> int { thrower(); return 0; }, err); };
  EXPECT_EQ(code_of([] { throw sim::SimError(sim::ErrorKind::StallTimeout, "stuck"); }), cli::kStall);
  EXPECT_EQ(code_of([] { throw sim::SimError(sim::ErrorKind::KinematicsFault, "skew"); }), cli::kKinematics);
  EXPECT_EQ(code_of([] { throw cli::IoError("gone"); }), cli::kIo);
  EXPECT_EQ(code_of([] { throw config::ConfigError("bad"); }), cli::kConfig);
  EXPECT_NE(err.str().find("error: StallTimeout: stuck"), std::string::npos);
}

TEST_F(TempDir, Reconfigure) {
  auto j = config::to_json(config::default_config(Morphology::BridgeXY));
  auto extra = j["roster"][0];
  extra["id"] = "r4";
  j["roster"].push_back(extra);
  const auto from = write("from.json", j.dump());
  const auto r = invoke({"reconfigure", from, kSamples + "/printer_bridge.json", path("swap.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("bridge_xy -> printer_bridge"), std::string::npos);
  EXPECT_FALSE(slurp(path("swap.txt")).empty());
  const auto same = invoke({"reconfigure", kSamples + "/bridge_xy.json", kSamples + "/bridge_xy.json", path("n.txt")});
  EXPECT_EQ(same.code, 0);
  EXPECT_TRUE(slurp(path("n.txt")).empty());
}
