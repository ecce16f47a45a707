#pragma once

// Experiment drivers behind the command-line tool. Each run works on an
// in-memory report; passing a non-empty output directory also writes the CSV
// files (12 significant digits, LF line endings, header row).

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uavfl/contract.hpp"
#include "uavfl/matching.hpp"
#include "uavfl/scenario.hpp"
#include "uavfl/verification.hpp"

namespace uavfl {

using UavSubregion = std::pair<std::string, std::string>;  // (uav id, subregion id)

/// Scenario resolved into priced schedules.
struct PreparedMarket {
  Market market;
  std::vector<Subregion> subregions;                // scenario order, aligned with market.schedules
  std::map<UavSubregion, CostVector> costs;         // every pair, declared terms applied
  std::map<UavSubregion, bool> feasible;
  std::map<UavSubregion, FeasibilityReport> physical_feasibility;  // physical UAVs only
};

/// Throws ScenarioError when a posted R̃ vector does not fit its ladder.
PreparedMarket prepare(const Scenario& scenario);

struct ContractReport {
  std::vector<ContractSchedule> schedules;
  std::map<std::string, Matrix> ic_matrices;
  std::map<std::string, std::vector<double>> profit_by_rank;  // owner profit if rank i wins
};

ContractReport run_contract(const Scenario& scenario, const std::filesystem::path& out = {});

struct MatchReport {
  MatchState state;
  PreferenceProfile preferences;        // over the final (calibrated) schedules
  std::vector<BlockingPair> blocking;
  double owner_profit = 0.0;
  std::map<std::string, double> uav_utility;  // matched UAVs only
};

/// Throws UnresolvedTie when calibration cannot separate a tie.
MatchReport run_match(const Scenario& scenario, const std::filesystem::path& out = {});

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double magnitude = 0.0;  // worst error or violation observed
  std::string detail;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<VerifyCheck> checks;

  bool ok() const;
};

struct VerifyOptions {
  OracleConfig oracle;
  std::uint64_t seed = 0;
  std::size_t coverage_draws = 1000;
  std::size_t stability_instances = 50;
  std::size_t schedule_draws = 200;
};

VerifyReport run_verify(const Scenario& scenario, const VerifyOptions& options,
                        const std::filesystem::path& out = {});

struct SweepRow {
  double param_value = 0.0;
  std::string metric;
  double value = 0.0;

  bool operator==(const SweepRow&) const = default;
};

/// Copy of `scenario` with the named numeric field set. Names: reward_hat,
/// sigma, mu, phi, theta_hat, subregion.<id>.<field>, uav.<id>.<field>.
/// Throws ScenarioError on an unknown name or id.
Scenario with_parameter(const Scenario& scenario, const std::string& name, double value);

/// `steps` evenly spaced values from `from` to `to` (inclusive); contract and
/// match are rerun at each value in parallel.
std::vector<SweepRow> run_sweep(const Scenario& scenario, const std::string& param, double from,
                                double to, int steps, const std::filesystem::path& out = {});

}  // namespace uavfl
