// uavfl: contract pricing and UAV/subregion matching experiments.
//
//   uavfl contract --scenario S --out DIR
//   uavfl match    --scenario S --out DIR
//   uavfl verify   --scenario S --out DIR [--grid-points N] [--seed K]
//   uavfl sweep    --scenario S --out DIR --param P --from A --to B --steps N
//
// Exit codes: 0 ok, 1 parse/validation error, 2 verification failure, 3 unresolved tie.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "uavfl/errors.hpp"
#include "uavfl/runner.hpp"
#include "uavfl/scenario.hpp"

namespace {

enum Exit { kOk = 0, kInvalid = 1, kVerifyFailed = 2, kUnresolvedTie = 3 };

int contract_cmd(const uavfl::Scenario& s, const std::string& out) {
  const auto report = uavfl::run_contract(s, out);
  for (const auto& sched : report.schedules) {
    std::cout << sched.subregion_id << ": " << sched.size() << " announcers, audit "
              << (sched.audit.ok() ? "ok" : "FAILED") << "\n";
  }
  return kOk;
}

int match_cmd(const uavfl::Scenario& s, const std::string& out) {
  const auto report = uavfl::run_match(s, out);
  for (const auto& id : s.uavs) {
    const auto sub = report.state.subregion_of(id.id);
    std::cout << id.id << " -> " << (sub ? *sub : "UNMATCHED") << "\n";
  }
  std::cout << "owner profit " << report.owner_profit << ", "
            << (report.blocking.empty() ? "stable" : "BLOCKING PAIRS FOUND") << "\n";
  return kOk;
}

int verify_cmd(const uavfl::Scenario& s, const std::string& out, int grid_points,
               std::optional<std::uint64_t> seed) {
  uavfl::VerifyOptions options;
  options.oracle.theta_grid_points = grid_points;
  options.seed = seed.value_or(s.seed);
  const auto report = uavfl::run_verify(s, options, out);
  std::cout << "seed " << report.seed << "\n";
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " " << c.magnitude;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << "\n";
  }
  return report.ok() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV federated-learning contract and matching experiments"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
    cmd->add_option("--out", out_dir, "Output directory")->required();
  };

  auto* contract = app.add_subcommand("contract", "Price each subregion's contract menu");
  common(contract);
  auto* match = app.add_subcommand("match", "Run deferred acceptance over the priced menus");
  common(match);

  auto* verify = app.add_subcommand("verify", "Check the scenario against brute-force oracles");
  common(verify);
  int grid_points = uavfl::OracleConfig{}.theta_grid_points;
  std::optional<std::uint64_t> seed;
  verify->add_option("--grid-points", grid_points, "Grid points over [0, 1]");
  verify->add_option("--seed", seed, "Seed for randomized checks (default: scenario seed)");

  auto* sweep = app.add_subcommand("sweep", "Rerun contract and match over a parameter range");
  common(sweep);
  std::string param;
  double from = 0.0, to = 0.0;
  int steps = 0;
  sweep->add_option("--param", param, "Parameter name")->required();
  sweep->add_option("--from", from, "First value")->required();
  sweep->add_option("--to", to, "Last value")->required();
  sweep->add_option("--steps", steps, "Number of values")->required()->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    const uavfl::Scenario s = uavfl::load_scenario(scenario_path);
    if (*contract) return contract_cmd(s, out_dir);
    if (*match) return match_cmd(s, out_dir);
    if (*verify) return verify_cmd(s, out_dir, grid_points, seed);
    uavfl::run_sweep(s, param, from, to, steps, out_dir);
    return kOk;
  } catch (const uavfl::UnresolvedTie& e) {
    std::cerr << "unresolved tie at subregion " << e.subregion_id() << ": " << e.what() << "\n";
    return kUnresolvedTie;
  } catch (const uavfl::ScenarioError& e) {
    for (const auto& p : e.problems()) std::cerr << "error: " << p << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
}
