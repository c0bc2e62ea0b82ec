#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lfl/report.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("lfl_cli_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  std::string cmd = std::string(LFL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("experiment nosuchstudy"), 2);
  EXPECT_EQ(run("sim --set pid.kpp=1"), 2);
  EXPECT_EQ(run("sim --set controller.kind=fuzzy"), 2);
  EXPECT_EQ(run("sim --config /nonexistent/lfl.conf"), 2);
}

TEST(Cli, SimWritesLogAndResolvedConfig) {
  fs::path d = scratch_dir("sim");
  ASSERT_EQ(run("sim --set sim.duration=2 --out " + d.string()), 0);
  bool found_csv = false, found_resolved = false;
  for (const auto& e : fs::recursive_directory_iterator(d)) {
    if (e.path().filename() == "resolved_config") found_resolved = true;
    if (e.path().extension() == ".csv" && slurp(e.path()).rfind("t,x,y,", 0) == 0) found_csv = true;
  }
  EXPECT_TRUE(found_csv);
  EXPECT_TRUE(found_resolved);
  fs::remove_all(d);
}

TEST(Cli, ReportReproducesExperimentBytes) {
  fs::path d = scratch_dir("report");
  ASSERT_EQ(run("experiment speed-sweep --trials 2 --seed 7 --set sim.duration=5 --out " + d.string()), 0);
  fs::path study = d / "speed-sweep";
  lfl::FileSet before;
  for (const auto& e : fs::recursive_directory_iterator(study)) {
    if (e.is_regular_file()) before[fs::relative(e.path(), study).string()] = slurp(e.path());
  }
  ASSERT_TRUE(before.count("report.txt"));
  EXPECT_EQ(lfl::read_data_files(study).size(), lfl::study_data_files(lfl::parse_study_data(lfl::read_data_files(study))).size());

  fs::remove(study / "report.txt");
  ASSERT_EQ(run("report " + study.string()), 0);
  for (const auto& [rel, bytes] : before) EXPECT_EQ(slurp(study / rel), bytes) << rel;

  // Rerunning the experiment overwrites with identical bytes.
  ASSERT_EQ(run("experiment speed-sweep --trials 2 --seed 7 --set sim.duration=5 --out " + d.string()), 0);
  for (const auto& [rel, bytes] : before) EXPECT_EQ(slurp(study / rel), bytes) << rel;
  fs::remove_all(d);
}

TEST(Cli, PowerCalibrateAndReferenceTune) {
  fs::path d = scratch_dir("misc");
  EXPECT_EQ(run("experiment power --out " + d.string()), 0);
  EXPECT_NE(slurp(d / "power" / "report.txt").find("407.8"), std::string::npos);
  EXPECT_EQ(run("calibrate --out " + d.string()), 0);
  EXPECT_EQ(run("tune --target reference --kp-range 1:20 --out " + d.string()), 0);
  EXPECT_NE(slurp(d / "tune" / "tune_report.txt").find("zn gains"), std::string::npos);
  EXPECT_EQ(run("report " + (d / "missing").string()), 3);
  fs::remove_all(d);
}
