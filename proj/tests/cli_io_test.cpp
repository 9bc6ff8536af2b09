#include "mmrl/cli_io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace mmrl {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mmrl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "cfg.json") {
    const auto path = dir_ / name;
    std::ofstream(path) << text;
    return path;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "mmrl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli_entry(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* kToy = R"({"horizon": 5, "realizations": 2, "system": {"blocks": 1}, "candidates": {"m": 3}})";

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  const double v = 0.49957322735539905;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Columns, Headers) {
  std::ostringstream out;
  write_per_step_csv(out, {});
  EXPECT_EQ(out.str(),
            "k,realization,x_norm_sq,u_norm_sq,stage_cost,cum_cost,cum_regret,chosen_or_theta_dist,"
            "sigma_uk_sq,misid\n");
  MonteCarloSummary s;
  std::ostringstream sum;
  write_summary_csv(sum, s);
  EXPECT_EQ(sum.str(), "k,mean_regret,misid_freq,bound,mean_V\n");
  EXPECT_EQ(per_step_columns(true).back(), "opt_cum_cost");
  EXPECT_EQ(summary_columns(true).back(), "mean_opt_regret");
}

TEST_F(CliTest, ToyRunRowCounts) {
  const auto cfg = write_config(kToy);
  ASSERT_EQ(run({"--config", cfg.string(), "--out", dir_.string()}), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("algo=s1 seed=1 realizations=2 horizon=5"), std::string::npos);
  const auto per_step = lines(slurp(dir_ / "per_step.csv"));
  const auto summary = lines(slurp(dir_ / "summary.csv"));
  ASSERT_EQ(per_step.size(), 1u + 2 * 5);
  ASSERT_EQ(summary.size(), 1u + 5);
  EXPECT_EQ(per_step[1].substr(0, 4), "1,0,");
  EXPECT_EQ(per_step[6].substr(0, 4), "1,1,");
  EXPECT_EQ(summary[1].substr(0, 2), "1,");
}

TEST_F(CliTest, RerunIsByteIdentical) {
  const auto cfg = write_config(kToy);
  ASSERT_EQ(run({"--config", cfg.string(), "--out", (dir_ / "a").string(), "--quiet"}), kExitOk);
  ASSERT_EQ(run({"--config", cfg.string(), "--out", (dir_ / "b").string(), "--quiet"}), kExitOk);
  EXPECT_TRUE(out_.str().empty());
  EXPECT_EQ(slurp(dir_ / "a" / "per_step.csv"), slurp(dir_ / "b" / "per_step.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "b" / "summary.csv"));
}

TEST_F(CliTest, SeedOverrideChangesOutput) {
  const auto cfg = write_config(kToy);
  ASSERT_EQ(run({"--config", cfg.string(), "--out", (dir_ / "a").string()}), kExitOk);
  ASSERT_EQ(run({"--config", cfg.string(), "--out", (dir_ / "b").string(), "--seed", "7"}), kExitOk);
  EXPECT_NE(out_.str().find("seed=7"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "a" / "per_step.csv"), slurp(dir_ / "b" / "per_step.csv"));
}

TEST_F(CliTest, OverridesRealizationsAndAlgo) {
  const auto cfg = write_config(R"({"horizon": 4, "system": {"blocks": 1}, "param": {}})");
  ASSERT_EQ(run({"--config", cfg.string(), "--out", dir_.string(), "--realizations", "3", "--algo",
                 "s3"}),
            kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("algo=s3"), std::string::npos);
  EXPECT_EQ(lines(slurp(dir_ / "per_step.csv")).size(), 1u + 3 * 4);
}

TEST_F(CliTest, ComparatorColumn) {
  const auto cfg = write_config(
      R"({"horizon": 3, "realizations": 1, "system": {"blocks": 1}, "outputs": {"comparator_mode": "same_noise"}})");
  ASSERT_EQ(run({"--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  EXPECT_NE(lines(slurp(dir_ / "per_step.csv")).front().find(",opt_cum_cost"), std::string::npos);
  EXPECT_NE(lines(slurp(dir_ / "summary.csv")).front().find(",mean_opt_regret"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_NE(err_.str().find("--config"), std::string::npos);
  EXPECT_EQ(run({"--config", "x.json", "--bogus"}), kExitUsage);
  EXPECT_EQ(run({"--config", "x.json", "--algo", "s9"}), kExitUsage);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST_F(CliTest, ConfigErrors) {
  EXPECT_EQ(run({"--config", (dir_ / "missing.json").string()}), kExitConfig);
  const auto bad = write_config(R"({"M": 0})");
  EXPECT_EQ(run({"--config", bad.string()}), kExitConfig);
  EXPECT_NE(err_.str().find("M must be ≥ 1"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "per_step.csv"));
}

TEST_F(CliTest, RuntimeErrorLeavesNoOutput) {
  // Unstabilizable truth: the benchmark Riccati iteration diverges.
  const auto cfg = write_config(
      R"({"horizon": 3, "realizations": 1, "system": {"preset": "explicit", "A": [[2.0]], "B": [[0.0]]}})");
  EXPECT_EQ(run({"--config", cfg.string(), "--out", dir_.string()}), kExitRuntime);
  EXPECT_NE(err_.str().find("runtime error"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "per_step.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "summary.csv"));
}

TEST_F(CliTest, BinaryExitCodes) {
  const auto cfg = write_config(kToy);
  const std::string bin = MMRL_CLI_PATH;
  const std::string quiet = " > /dev/null 2>&1";
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + quiet).c_str());
    return WEXITSTATUS(raw);
  };
  EXPECT_EQ(status("--config " + cfg.string() + " --out " + dir_.string()), kExitOk);
  EXPECT_EQ(status(""), kExitUsage);
  EXPECT_EQ(status("--config " + (dir_ / "nope.json").string()), kExitConfig);
}

}  // namespace
}  // namespace mmrl
