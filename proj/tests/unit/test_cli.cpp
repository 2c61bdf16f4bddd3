#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cogalloc_cli_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run(const std::string& args) {
    const std::string cmd = std::string("COGALLOC_LOG=quiet ") + COGALLOC_CLI_PATH + " " + args +
                            " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, BadConfigExitsWithTwo) {
  const auto cfg = write("bad.json", R"({"system": {"frame_duration_s": -1}})");
  EXPECT_EQ(run("optimize --config " + cfg.string() + " --out " + dir_.string()), 2);
  EXPECT_NE(slurp(dir_ / "stderr.txt").find("frame_duration_s"), std::string::npos);
  EXPECT_EQ(run("optimize --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run("optimize"), 2);
}

TEST_F(Cli, EmptyProbeGridExitsWithTwo) {
  const auto cfg = write("probe.json", R"({"probe": {"pfa_values": []}})");
  EXPECT_EQ(run("probe-hessian --config " + cfg.string() + " --out " + dir_.string()), 2);
}

TEST_F(Cli, SingleOptimizePoint) {
  const auto cfg = write("one.json", R"({"users": {"count": 3}, "trials": 1})");
  ASSERT_EQ(run("optimize --config " + cfg.string() + " --out " + dir_.string()), 0);
  std::istringstream csv(slurp(dir_ / "optimize.csv"));
  std::string line;
  int data_rows = 0;
  bool header_seen = false;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++data_rows;
  }
  EXPECT_EQ(data_rows, 1);
  EXPECT_TRUE(fs::exists(dir_ / "effective_config.json"));
}

TEST_F(Cli, SameSeedSameBytes) {
  const auto cfg = write("sim.json", R"({"users": {"count": 3}, "traffic": {"frames": 30},
                                         "trials": 2})");
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 9 --out " + a.string()), 0);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 9 --jobs 2 --out " + b.string()),
            0);
  EXPECT_EQ(slurp(a / "simulate.csv"), slurp(b / "simulate.csv"));
  EXPECT_EQ(slurp(a / "simulate_summary.csv"), slurp(b / "simulate_summary.csv"));
  EXPECT_FALSE(slurp(a / "simulate.csv").empty());
}

TEST_F(Cli, EmitEffectiveConfigReloads) {
  const auto cfg = write("e.json", R"({"seed": 4})");
  ASSERT_EQ(run("optimize --config " + cfg.string() + " --emit-effective-config"), 0);
  const std::string emitted = slurp(dir_ / "stdout.txt");
  const auto again = write("again.json", emitted);
  ASSERT_EQ(run("optimize --config " + again.string() + " --emit-effective-config"), 0);
  EXPECT_EQ(slurp(dir_ / "stdout.txt"), emitted);
}

TEST_F(Cli, ProbeWritesTable) {
  const auto cfg = write("p.json", "{}");
  ASSERT_EQ(run("probe-hessian --config " + cfg.string() + " --out " + dir_.string()), 0);
  const std::string table = slurp(dir_ / "probe_hessian.csv");
  EXPECT_NE(table.find("pfa,det_h,det_ha,du_dpfa,du_dk"), std::string::npos);
}
