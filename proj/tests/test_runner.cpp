#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uavfl/errors.hpp"
#include "uavfl/runner.hpp"
#include "uavfl/scenario.hpp"

using namespace uavfl;
namespace fs = std::filesystem;

namespace {

std::string fixture_path(const std::string& name) {
  return std::string(UAVFL_SCENARIO_DIR) + "/" + name;
}

Scenario fixture(const std::string& name) { return load_scenario(fixture_path(name)); }

fs::path scratch(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const fs::path dir = fs::temp_directory_path() / ("uavfl_" + tag + "_" + std::to_string(rng()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(UAVFL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Two identical UAVs at one subregion with plenty of fixed compensation: only
// many calibration steps can separate them, and one round is allowed.
std::string stubborn_tie_scenario() {
  return R"({
  "format_version": 1,
  "economy": {"phi": 0.05, "mu": 1, "sigma": 100},
  "reward_hat": {"value": 50},
  "calibration": {"mode": "relative", "delta": 0.01, "max_rounds": 1},
  "subregions": [{"id": "s", "center": [0, 0], "full_distance": 1000, "data_volume": 10}],
  "uavs": [
    {"id": "p", "types": {"alpha": 250, "beta": 20, "psi": 100, "zeta": 0}},
    {"id": "q", "types": {"alpha": 250, "beta": 20, "psi": 100, "zeta": 0}}
  ]
})";
}

}  // namespace

TEST(Contract, WritesFourTablesWithHeaders) {
  const auto dir = scratch("contract");
  const auto r = run_contract(fixture("contract_demo.scn"), dir);
  ASSERT_EQ(r.schedules.size(), 1u);
  const std::map<std::string, std::string> headers = {
      {"coverage.csv", "subregion,rank,uav,upsilon,theta"},
      {"rewards.csv", "subregion,rank,uav,reward_tilde,reward_hat,reward"},
      {"ic_matrix.csv", "subregion,i,k,utility"},
      {"profit.csv", "subregion,winner_rank,uav,profit"}};
  for (const auto& [file, header] : headers) {
    const std::string text = slurp(dir / file);
    EXPECT_EQ(text.substr(0, text.find('\n')), header) << file;
    EXPECT_EQ(text.find('\r'), std::string::npos) << file;
  }
  EXPECT_EQ(read_csv(dir / "coverage.csv").size(), 7u);
  EXPECT_EQ(read_csv(dir / "ic_matrix.csv").size(), 37u);
  fs::remove_all(dir);
}

TEST(Contract, CoverageColumnDescendsAndUsesTwelveDigits) {
  const auto dir = scratch("digits");
  run_contract(fixture("contract_demo.scn"), dir);
  const auto rows = read_csv(dir / "coverage.csv");
  EXPECT_EQ(rows[1][4], "0.640740740741");
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LT(std::stod(rows[i][4]), std::stod(rows[i - 1][4]));
  }
  fs::remove_all(dir);
}

TEST(Contract, ProfitFallsWithWinnerRank) {
  const auto r = run_contract(fixture("contract_demo.scn"));
  const auto& p = r.profit_by_rank.at("1");
  ASSERT_EQ(p.size(), 6u);
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_LT(p[i], p[i - 1]);
}

TEST(Contract, PostedRewardsOfWrongLengthAreRejected) {
  Scenario s = fixture("contract_demo.scn");
  s.subregions[0].posted_reward_tilde = {1.0, 2.0};
  EXPECT_THROW(run_contract(s), ScenarioError);
}

TEST(Match, SixBySixTablesAndProfit) {
  const auto dir = scratch("match");
  const auto r = run_match(fixture("fig6.scn"), dir);
  const auto assignment = read_csv(dir / "assignment.csv");
  EXPECT_EQ(assignment[0], (std::vector<std::string>{"uav", "subregion", "theta", "reward_tilde",
                                                     "reward_hat", "reward", "utility",
                                                     "reward_vector"}));
  ASSERT_EQ(assignment.size(), 7u);
  for (std::size_t i = 1; i < assignment.size(); ++i) {
    EXPECT_EQ(assignment[i][1], r.state.assignment.at(assignment[i][0]));
    EXPECT_EQ(assignment[i][7], "initial");
    EXPECT_GE(std::stod(assignment[i][6]), 0.0);
  }
  EXPECT_EQ(read_csv(dir / "stability.csv")[1][0], "stable");
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "calibration.csv"));

  // Owner profit recomputed from the written table: σ·mean log(1+μθD) − Σ reward.
  const Scenario s = fixture("fig6.scn");
  double gain = 0.0, paid = 0.0;
  for (std::size_t i = 1; i < assignment.size(); ++i) {
    const auto& sub = std::find_if(s.subregions.begin(), s.subregions.end(), [&](const auto& e) {
                        return e.sub.id == assignment[i][1];
                      })->sub;
    gain += std::log(1.0 + s.economy.mu * std::stod(assignment[i][2]) * sub.data_volume);
    paid += std::stod(assignment[i][5]);
  }
  const double profit = s.economy.sigma * gain / s.subregions.size() - paid;
  EXPECT_NEAR(r.owner_profit, profit, 1e-6 * std::abs(profit));
  fs::remove_all(dir);
}

TEST(Match, UnmatchedUavIsListed) {
  const auto dir = scratch("fig8");
  run_match(fixture("fig8.scn"), dir);
  const auto rows = read_csv(dir / "assignment.csv");
  const auto six = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r[0] == "6"; });
  ASSERT_NE(six, rows.end());
  EXPECT_EQ((*six)[1], "UNMATCHED");
  EXPECT_EQ((*six)[7], "none");
  fs::remove_all(dir);
}

TEST(Match, CalibratedSubregionIsLogged) {
  const auto dir = scratch("table3");
  run_match(fixture("table3.scn"), dir);
  const auto rows = read_csv(dir / "calibration.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "3");
  EXPECT_EQ(rows[1][2], "4");
  const auto assignment = read_csv(dir / "assignment.csv");
  const auto four = std::find_if(assignment.begin(), assignment.end(),
                                 [](const auto& r) { return r[0] == "4"; });
  EXPECT_EQ((*four)[7], "calibrated");
  fs::remove_all(dir);
}

TEST(Match, OutputIsDeterministic) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  run_match(fixture("table3.scn"), a);
  run_match(fixture("table3.scn"), b);
  for (const char* f : {"assignment.csv", "calibration.csv", "stability.csv", "report.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Verify, FixturesPassAndCorruptedRewardsFail) {
  VerifyOptions o;
  o.oracle.theta_grid_points = 2001;
  o.coverage_draws = 100;
  o.stability_instances = 20;
  o.schedule_draws = 50;
  for (const char* f : {"contract_demo.scn", "fig6.scn", "table3.scn", "physical.scn"}) {
    EXPECT_TRUE(run_verify(fixture(f), o).ok()) << f;
  }
  const auto bad = run_verify(fixture("corrupted_rewards.scn"), o);
  EXPECT_FALSE(bad.ok());
  const auto failed = std::find_if(bad.checks.begin(), bad.checks.end(),
                                   [](const auto& c) { return !c.pass; });
  ASSERT_NE(failed, bad.checks.end());
  EXPECT_EQ(failed->name.rfind("audit:", 0), 0u) << failed->name;
}

TEST(Verify, SameSeedSameReport) {
  VerifyOptions o;
  o.seed = 77;
  o.oracle.theta_grid_points = 1001;
  o.coverage_draws = 50;
  o.stability_instances = 10;
  o.schedule_draws = 20;
  const auto a = scratch("verify_a");
  const auto b = scratch("verify_b");
  run_verify(fixture("fig6.scn"), o, a);
  run_verify(fixture("fig6.scn"), o, b);
  EXPECT_EQ(slurp(a / "verify.csv"), slurp(b / "verify.csv"));
  EXPECT_EQ(slurp(a / "verify.csv").rfind("check,result,magnitude,detail,seed\n", 0), 0u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Sweep, FixedRewardFirstResponse) {
  const auto rows = run_sweep(fixture("no_response.scn"), "reward_hat", 0.0, 20.0, 21);
  const auto first = std::find_if(rows.begin(), rows.end(),
                                  [](const auto& r) { return r.metric == "first_response"; });
  ASSERT_NE(first, rows.end());
  EXPECT_DOUBLE_EQ(first->value, 10.0);
  for (const auto& r : rows) {
    if (r.metric == "responders") EXPECT_EQ(r.value, r.param_value >= 10.0 ? 1.0 : 0.0);
  }
}

TEST(Sweep, UtilityFallsAsTheBaseMovesAway) {
  const auto rows = run_sweep(fixture("physical.scn"), "uav.a.base_x", 0.0, -1000.0, 6);
  std::vector<double> u;
  for (const auto& r : rows) {
    if (r.metric == "utility:a@north") u.push_back(r.value);
  }
  ASSERT_EQ(u.size(), 6u);
  for (std::size_t i = 1; i < u.size(); ++i) EXPECT_LT(u[i], u[i - 1]);
}

TEST(Sweep, EmptyRangeWritesHeaderOnly) {
  const auto dir = scratch("sweep_empty");
  EXPECT_TRUE(run_sweep(fixture("no_response.scn"), "sigma", 1.0, 2.0, 0, dir).empty());
  EXPECT_EQ(slurp(dir / "sweep.csv"), "param_value,metric,value\n");
  fs::remove_all(dir);
}

TEST(Sweep, UnknownParameterIsRejected) {
  EXPECT_THROW(run_sweep(fixture("no_response.scn"), "gamma", 0.0, 1.0, 0), ScenarioError);
  EXPECT_THROW(with_parameter(fixture("no_response.scn"), "uav.zz.alpha", 1.0), ScenarioError);
  EXPECT_THROW(with_parameter(fixture("no_response.scn"), "subregion.1.colour", 1.0),
               ScenarioError);
}

TEST(Sweep, InvalidValuesAreMarkedNotFatal) {
  const auto rows = run_sweep(fixture("no_response.scn"), "phi", -1.0, 0.05, 2);
  EXPECT_NE(std::find(rows.begin(), rows.end(), SweepRow{-1.0, "invalid", 1.0}), rows.end());
}

TEST(Sweep, RepeatRunsAgree) {
  const Scenario s = fixture("fig6.scn");
  EXPECT_EQ(run_sweep(s, "sigma", 30000.0, 90000.0, 7), run_sweep(s, "sigma", 30000.0, 90000.0, 7));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(cli("contract --scenario " + fixture_path("contract_demo.scn") + out), 0);
  EXPECT_EQ(cli("match --scenario " + fixture_path("fig6.scn") + out), 0);
  EXPECT_EQ(cli("sweep --scenario " + fixture_path("no_response.scn") + out +
                " --param reward_hat --from 0 --to 20 --steps 3"),
            0);
  EXPECT_EQ(cli("verify --grid-points 1001 --scenario " + fixture_path("contract_demo.scn") + out), 0);
  EXPECT_EQ(cli("verify --grid-points 1001 --scenario " + fixture_path("corrupted_rewards.scn") + out),
            2);

  const auto bad = dir / "bad.scn";
  std::ofstream(bad) << "{ \"format_version\": 1, ";
  EXPECT_EQ(cli("match --scenario " + bad.string() + out), 1);
  EXPECT_EQ(cli("match --scenario /nonexistent.scn" + out), 1);
  EXPECT_EQ(cli("match" + out), 1);
  EXPECT_EQ(cli("sweep --scenario " + fixture_path("fig6.scn") + out +
                " --param nope --from 0 --to 1 --steps 2"),
            1);

  const auto tie = dir / "tie.scn";
  std::ofstream(tie) << stubborn_tie_scenario();
  EXPECT_EQ(cli("match --scenario " + tie.string() + out), 3);
  fs::remove_all(dir);
}
