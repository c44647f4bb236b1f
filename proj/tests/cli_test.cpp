#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "adaptbound/clt_bounds.hpp"
#include "adaptbound/numeric.hpp"

using nlohmann::json;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

// stdout and stderr are merged
Result run_cli(const std::string& args) {
  const std::string cmd = std::string(ADAPTBOUND_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("adaptbound_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path write_config(const std::string& name, json doc) {
    doc["output"] = {{"csv", (dir_ / (name + ".csv")).string()},
                     {"summary", (dir_ / (name + ".json")).string()}};
    const auto path = dir_ / (name + "_config.json");
    std::ofstream(path) << doc.dump();
    return path;
  }

  std::filesystem::path dir_;
};

}  // namespace

TEST(CliBounds, MatchesLibraryEvaluation) {
  const Result r = run_cli(
      "bounds --m 2560 --d 86 --eta 0.05 --epsilon 0.01 --alpha 0.1 --empirical_risk 12.5 "
      "--cutoff 20 --b_hat_w 12 --n 40");
  ASSERT_EQ(r.status, 0) << r.out;
  const json j = json::parse(r.out);

  using namespace adaptbound::bounds;
  const RiskBoundInputs in{2560, 86, 0.05, 12.5, 1.0, 0.1};
  const TheoremBound b = theorem_bound(in, QualityDomain::make(0.0, 100.0), 20.0, 12.0, 40);
  EXPECT_EQ(j["nu"].get<double>(), adaptbound::round_sig12(b.nu));
  EXPECT_EQ(j["delta_prime"].get<double>(), adaptbound::round_sig12(b.delta_prime));
  EXPECT_EQ(j["error_bound"].get<double>(), adaptbound::round_sig12(b.error_bound));
  EXPECT_EQ(j["min_probability"].get<double>(), adaptbound::round_sig12(b.min_probability));
  EXPECT_EQ(j["kappa"].get<double>(), 1.0);
  EXPECT_EQ(j["n_feasible"].get<int>(), 40);
}

TEST(CliBounds, WorkedExampleNearCertainty) {
  // a huge sample keeps delta below 1e-3, so r + delta' is about 25
  const Result r = run_cli(
      "bounds --m 10000000000000000 --d 1 --eta 1e-9 --epsilon 0 --alpha 1e-9 "
      "--empirical_risk 24.999 --cutoff 10 --b_hat_w 7 --n 25");
  ASSERT_EQ(r.status, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["p_m"].get<double>(), 0.3, 1e-5);
  EXPECT_GE(j["min_probability"].get<double>(), 0.99);
  EXPECT_EQ(j["delta_prime"].get<double>(), j["delta"].get<double>());
}

TEST(CliBounds, RejectsInvalidInputs) {
  Result r = run_cli(
      "bounds --m 50 --d 86 --eta 0.05 --epsilon 0.01 --alpha 0.1 --empirical_risk 1 "
      "--cutoff 2 --b_hat_w 1 --n 3");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("d >= m"), std::string::npos) << r.out;

  r = run_cli(
      "bounds --m 500 --d 86 --eta 1.5 --epsilon 0.01 --alpha 0.1 --empirical_risk 1 "
      "--cutoff 2 --b_hat_w 1 --n 3");
  EXPECT_EQ(r.status, 2);
  r = run_cli("bounds --m 500");
  EXPECT_EQ(r.status, 2);
  r = run_cli("");
  EXPECT_EQ(r.status, 2);
  r = run_cli("frobnicate");
  EXPECT_EQ(r.status, 2);
}

TEST(CliSelftest, PassesAndReplays) {
  const Result a = run_cli("smc-selftest --epsilon 0.05 --alpha 0.05 --repetitions 200 --seed 3");
  ASSERT_EQ(a.status, 0) << a.out;
  const json j = json::parse(a.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["repetitions"].get<int>(), 200);
  const Result b = run_cli("smc-selftest --epsilon 0.05 --alpha 0.05 --repetitions 200 --seed 3 --threads 2");
  EXPECT_EQ(a.out, b.out);
}

TEST(CliSelftest, RejectsZeroRepetitions) {
  EXPECT_EQ(run_cli("smc-selftest --repetitions 0").status, 2);
  EXPECT_EQ(run_cli("smc-selftest --epsilon 0").status, 2);
}

TEST(CliSelftest, HelpExitsCleanly) {
  const Result r = run_cli("--help");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("smc-selftest"), std::string::npos);
}

TEST_F(CliRun, WritesDeterministicOutputs) {
  const json doc = {{"seed", 11},
                    {"engine", {{"warmup_cycles", 1}, {"total_cycles", 3}}},
                    {"smc", {{"epsilon", 0.1}}}};
  const auto first = write_config("a", doc);
  const auto second = write_config("b", doc);
  ASSERT_EQ(run_cli(first.string()).status, 2);  // subcommand required
  const Result ra = run_cli("run " + first.string());
  ASSERT_EQ(ra.status, 0) << ra.out;
  const Result rb = run_cli("run " + second.string());
  ASSERT_EQ(rb.status, 0) << rb.out;

  const std::string csv = slurp(dir_ / "a.csv");
  EXPECT_EQ(csv, slurp(dir_ / "b.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "cycle,reduced_size,cutoff,b_hat_w,selected_id,B_r,B_w,measured_error,error_bound,"
            "min_probability,empirical_risk,bound_holds");
  const json summary = json::parse(slurp(dir_ / "a.json"));
  EXPECT_EQ(summary["cycles"], 3);
  EXPECT_EQ(summary["reduced_cycles"], 2);
}

TEST_F(CliRun, WarmupOnlyRun) {
  const auto cfg = write_config("w", {{"seed", 2},
                                      {"engine", {{"warmup_cycles", 2}, {"total_cycles", 2}}},
                                      {"smc", {{"epsilon", 0.1}}}});
  const Result r = run_cli("run " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.out;
  const json summary = json::parse(slurp(dir_ / "w.json"));
  EXPECT_TRUE(summary["bound_holds_fraction"].is_null());
}

TEST_F(CliRun, BadConfigsExitWithUsageError) {
  EXPECT_EQ(run_cli("run " + (dir_ / "missing.json").string()).status, 2);
  const auto bad = write_config("bad", {{"seed", 2}, {"engine", {{"warmup_cycles", 0}}}});
  EXPECT_EQ(run_cli("run " + bad.string()).status, 2);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "bad.csv"));
  const auto unwritable = dir_ / "u_config.json";
  std::ofstream(unwritable) << json{{"seed", 1},
                                    {"engine", {{"warmup_cycles", 1}, {"total_cycles", 1}}},
                                    {"smc", {{"epsilon", 0.2}}},
                                    {"output", {{"csv", (dir_ / "no/such/dir.csv").string()},
                                                {"summary", (dir_ / "u.json").string()}}}}
                                   .dump();
  EXPECT_EQ(run_cli("run " + unwritable.string()).status, 1);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "u.json"));
}
