#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace lqg::cli;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "lqg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_command(int(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lqg_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Scenario, Defaults) {
  const Scenario s = parse_scenario("{}");
  EXPECT_EQ(s.params.p1, 3.0);
  EXPECT_EQ(s.params.N, 40);
  EXPECT_EQ(s.p2_grid.size(), 5u);
  EXPECT_EQ(s.budget, 20.0);
}

TEST(Scenario, ReadsFields) {
  const Scenario s = parse_scenario(
      R"({"p2": 1.5, "N": 12, "mode": "pooled-cooperative", "splits": [0, 20]})");
  EXPECT_EQ(s.params.p2, 1.5);
  EXPECT_EQ(s.params.N, 12);
  EXPECT_EQ(s.params.mode, lqg::Mode::PooledCooperative);
  EXPECT_EQ(s.splits, (std::vector<double>{0, 20}));
}

TEST(Scenario, RejectsMalformedInput) {
  EXPECT_THROW(parse_scenario("{"), InputError);
  EXPECT_THROW(parse_scenario("[1]"), InputError);
  EXPECT_THROW(parse_scenario(R"({"p3": 1})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"N": "forty"})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"mode": "duel"})"), InputError);
  EXPECT_THROW(parse_scenario(R"({"p2_grid": []})"), InputError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), InputError);
}

TEST(Files, AtomicWriteReplaces) {
  const fs::path dir = scratch("atomic");
  const std::string f = (dir / "a.txt").string();
  write_atomic(f, "one");
  write_atomic(f, "two");
  EXPECT_EQ(slurp(f), "two");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
}

TEST(Command, ExitCodes) {
  const fs::path dir = scratch("codes");
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"launch"}), 2);
  EXPECT_EQ(run({"solve", "--tol", "-1"}), 2);
  std::ofstream(dir / "bad.json") << R"({"r1": 0})";
  EXPECT_EQ(run({"solve", "--scenario", (dir / "bad.json").string(), "--out", dir.string()}), 2);
  std::ofstream(dir / "neg.json") << R"({"p2": -1})";
  EXPECT_EQ(run({"solve", "--scenario", (dir / "neg.json").string(), "--out", dir.string()}), 2);
  EXPECT_FALSE(fs::exists(dir / "solution.json"));
}

TEST(Command, SolveWritesDeterministicOutputs) {
  const fs::path a = scratch("solve_a"), b = scratch("solve_b");
  EXPECT_EQ(run({"solve", "--grid-n", "12", "--out", a.string()}), 0);
  EXPECT_EQ(run({"solve", "--grid-n", "12", "--threads", "3", "--out", b.string()}), 0);
  for (const char* f : {"residuals.csv", "mean_paths.csv", "policy_kernel.csv",
                        "state_kernel.csv", "wedge_kernel.csv", "filter_kernel.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(slurp(a / "mean_paths.csv").substr(0, 31), "t,player,coord,Dbar,Xbar,Vbar,H");
  EXPECT_NE(slurp(a / "solution.json").find("\"converged\": true"), std::string::npos);
}

TEST(Command, NonConvergenceExitsOne) {
  const fs::path dir = scratch("noconv");
  EXPECT_EQ(run({"solve", "--grid-n", "12", "--max-iter", "1", "--out", dir.string()}), 1);
  EXPECT_NE(slurp(dir / "solution.json").find("\"converged\": false"), std::string::npos);
}

TEST(Command, Experiments) {
  const fs::path dir = scratch("experiments");
  std::ofstream(dir / "s.json") << R"({"N": 12, "p2_grid": [1, 3], "splits": [0, 10, 20]})";
  const std::string sc = (dir / "s.json").string();
  EXPECT_EQ(run({"pool-compare", "--scenario", sc, "--out", dir.string()}), 0);
  EXPECT_EQ(run({"precision-sweep", "--scenario", sc, "--out", dir.string()}), 0);
  EXPECT_EQ(run({"wedge-export", "--scenario", sc, "--out", dir.string()}), 0);
  for (const char* f : {"pooling.csv", "pooling.json", "sweep.csv", "sweep_detail.csv",
                        "sweep.json", "wedges.csv", "wedges.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream sweep(dir / "sweep.csv");
  std::string line;
  int rows = 0;
  while (std::getline(sweep, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Command, RiccatiCheckReports) {
  const fs::path dir = scratch("riccati");
  const int code = run({"riccati-check", "--grid-n", "20", "--out", dir.string()});
  EXPECT_TRUE(code == 0 || code == 1);
  const std::string j = slurp(dir / "riccati.json");
  EXPECT_NE(j.find("kernel_costate_identity"), std::string::npos);
  EXPECT_NE(j.find("wedge_zero"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "riccati_paths.csv"));
}
