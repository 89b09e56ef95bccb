#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("pkopt_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the tool with stdout and stderr merged.
  RunResult Run(const std::string& args) const {
    const std::string cmd = std::string(PKOPT_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  std::string Config(const std::string& name) const {
    return std::string(PKOPT_CONFIG_DIR) + "/" + name;
  }

  std::string Write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  std::string Out(const std::string& sub) const { return (dir_ / sub).string(); }

  static std::string Read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Data rows of a CSV file, skipping the comment and header lines.
  static std::vector<std::string> Rows(const fs::path& p) {
    std::istringstream in(Read(p));
    std::vector<std::string> rows;
    std::string line;
    int skipped = 0;
    while (std::getline(in, line)) {
      if (skipped < 2) {
        ++skipped;
        continue;
      }
      if (!line.empty()) rows.push_back(line);
    }
    return rows;
  }

  fs::path dir_;
};

TEST_F(CliTest, CheckPassesOnVanDerPol) {
  const RunResult r = Run("check --config " + Config("vanderpol.json") + " --out " + Out("a"));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  const json j = json::parse(Read(dir_ / "a" / "structure_report.json"));
  for (const char* key : {"symmetry_defect", "divergence", "monodromy_symplectic_defect",
                          "monodromy_det_defect", "adjoint_defect"}) {
    ASSERT_TRUE(j.contains(key)) << key;
  }
  EXPECT_LE(j["symmetry_defect"].get<double>(), 1e-10);
  EXPECT_LE(j["monodromy_symplectic_defect"].get<double>(), 1e-6);
  EXPECT_TRUE(j.contains("meta"));
}

TEST_F(CliTest, CheckFailsOnCorruptedField) {
  const RunResult r =
      Run("check --config " + Config("corrupted_field.json") + " --out " + Out("a"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("symmetry_defect"), std::string::npos) << r.output;
}

TEST_F(CliTest, ConfigErrors) {
  const std::string missing = Write("missing.json", R"({"basis": {"count": 5}})");
  RunResult r = Run("check --config " + missing);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("problem"), std::string::npos) << r.output;

  const std::string unknown = Write("unknown.json", R"({"problem": "vanderpol", "bogus": 1})");
  EXPECT_EQ(Run("spectrum --config " + unknown).exit_code, 2);
  EXPECT_NE(Run("spectrum --config " + Out("nope.json")).exit_code, 0);
}

TEST_F(CliTest, SingleFunctionBasis) {
  const std::string cfg = Write("one.json", R"({"problem": "vanderpol", "basis": {"count": 1}})");
  const RunResult r = Run("spectrum --config " + cfg + " --out " + Out("a"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto rows = Rows(dir_ / "a" / "spectrum.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].substr(0, 6), "0,0,0,");
  const json pairing = json::parse(Read(dir_ / "a" / "pairing.json"));
  EXPECT_TRUE(pairing["pairs"].empty());
}

TEST_F(CliTest, LqrSpectrum) {
  const RunResult r = Run("spectrum --config " + Config("lqr.json") + " --out " + Out("a"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto rows = Rows(dir_ / "a" / "spectrum.csv");
  ASSERT_EQ(rows.size(), 4u);
  for (const std::string& row : rows) {
    double idx, re, im;
    ASSERT_EQ(std::sscanf(row.c_str(), "%lf,%lf,%lf", &idx, &re, &im), 3);
    EXPECT_NEAR(std::abs(re), std::sqrt(3.0) / 2, 1e-8);
    EXPECT_NEAR(std::abs(im), 0.5, 1e-8);
  }
}

TEST_F(CliTest, SynthesizeLqrGain) {
  const RunResult r = Run("synthesize --config " + Config("lqr.json") + " --out " + Out("a"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const json law = json::parse(Read(dir_ / "a" / "law.json"));
  double k1 = 0, k2 = 0;
  for (const auto& t : law["feedback_fit"][0]) {
    const auto e = t["exps"].get<std::vector<int>>();
    if (e == std::vector<int>{1, 0}) k1 = t["coeff"].get<double>();
    if (e == std::vector<int>{0, 1}) k2 = t["coeff"].get<double>();
  }
  EXPECT_NEAR(k1, -1.0, 1e-6);
  EXPECT_NEAR(k2, -std::sqrt(3.0), 1e-6);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "feedback_grid.csv"));
  EXPECT_EQ(Rows(dir_ / "a" / "feedback_grid.csv").size(), 121u);
}

TEST_F(CliTest, ThresholdAboveSpectrumIsSolverError) {
  const std::string cfg =
      Write("tau.json", R"({"problem": "vanderpol", "tolerances": {"tau": 100}})");
  const RunResult r = Run("synthesize --config " + cfg + " --out " + Out("a"));
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("no unstable eigenvalues"), std::string::npos) << r.output;
}

TEST_F(CliTest, CompareWithoutReferenceIsSkipped) {
  const std::string cfg = Write(
      "nor.json", R"({"problem": "double_integrator_lqr",
      "basis": {"indices": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]},
      "grid": {"points_per_dim": 3}})");
  const RunResult r = Run("compare --config " + cfg + " --out " + Out("a"));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("reference"), std::string::npos) << r.output;
}

TEST_F(CliTest, SimulateAndCompareReproduction) {
  const std::string cfg = Config("vanderpol_n4.json");
  ASSERT_EQ(Run("simulate --config " + cfg + " --out " + Out("a")).exit_code, 0);
  const json cost = json::parse(Read(dir_ / "a" / "cost.json"));
  EXPECT_FALSE(cost.dump().empty());
  EXPECT_FALSE(Rows(dir_ / "a" / "trajectories.csv").empty());
  ASSERT_EQ(Run("compare --config " + cfg + " --out " + Out("a")).exit_code, 0);
  const json cmp = json::parse(Read(dir_ / "a" / "comparison.json"));
  EXPECT_NEAR(cmp["l2sq_error"].get<double>(), 6.35e-5, 0.05e-5);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  const std::string cfg = Config("vanderpol_n4.json");
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(Run("synthesize --config " + cfg + " --out " + Out(sub)).exit_code, 0);
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
    const fs::path other = dir_ / "b" / entry.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(Read(entry.path()), Read(other)) << entry.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 4);
}

}  // namespace
