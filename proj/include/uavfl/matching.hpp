#pragma once

// One-to-one UAV ↔ subregion assignment by subregion-proposing deferred
// acceptance. Subregions rank UAVs by marginal cost υ; UAVs rank subregions by
// the utility of the contract item they would receive there. Ties at the top
// of a subregion's list are separated by lowering that subregion's R̃ vector
// until only one tied UAV still prefers it over its outside option.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uavfl/contract.hpp"
#include "uavfl/economics.hpp"

namespace uavfl {

struct PreferenceList {
  std::string owner;
  std::vector<std::string> ranked;  // most preferred first
  std::vector<double> scores;       // υ (ascending) for subregions, utility (descending) for UAVs

  bool contains(const std::string& id) const;
  /// Score of `id`, or nullopt when it is not on the list.
  std::optional<double> score_of(const std::string& id) const;
};

struct PreferenceProfile {
  std::vector<PreferenceList> subregions;
  std::vector<PreferenceList> uavs;

  const PreferenceList& subregion(const std::string& id) const;
  const PreferenceList& uav(const std::string& id) const;
};

/// Uniform step applied to a subregion's R̃ vector during a tie-break.
struct CalibrationPolicy {
  enum class Mode { relative, absolute };
  Mode mode = Mode::relative;
  double delta = 0.01;
  int max_rounds = 500;

  bool operator==(const CalibrationPolicy&) const = default;
};

void validate(const CalibrationPolicy& policy);

struct CalibrationEntry {
  std::string subregion_id;
  std::vector<std::string> tied;
  std::string survivor;
  int steps = 0;
  std::vector<double> before;  // R̃ by rank
  std::vector<double> after;
};

/// Announced schedules of every subregion plus the economy they were priced in.
/// Each ladder holds exactly the UAVs that passed the feasibility gate there,
/// with their (α, β, ψ, ζ) at that subregion.
struct Market {
  std::vector<ContractSchedule> schedules;
  std::vector<std::string> uav_ids;
  EconomyParams econ;
};

using Assignment = std::map<std::string, std::string>;  // uav id -> subregion id

struct MatchState {
  Assignment assignment;
  std::set<std::string> unmatched_subregions;
  std::set<std::string> exhausted;
  std::vector<CalibrationEntry> calibration_log;
  std::vector<ContractSchedule> schedules;  // final, after any calibration
  int rounds = 0;

  std::optional<std::string> subregion_of(const std::string& uav_id) const;
  std::optional<std::string> uav_of(const std::string& subregion_id) const;
};

/// Utility the UAV would get from the item at its own rung of the schedule;
/// nullopt when the UAV is not on that ladder.
std::optional<double> hypothetical_utility(const ContractSchedule& schedule,
                                           const std::string& uav_id, const EconomyParams& econ);

PreferenceList build_subregion_preferences(const Subregion& sub,
                                           std::span<const Announcer> announcers, double phi);
PreferenceList build_subregion_preferences(const ContractSchedule& schedule);

/// Subregions with negative hypothetical utility are left off: staying
/// unmatched (utility 0) beats them.
PreferenceList build_uav_preferences(const std::string& uav_id,
                                     std::span<const ContractSchedule> schedules,
                                     const EconomyParams& econ);

PreferenceProfile build_preferences(std::span<const ContractSchedule> schedules,
                                    std::span<const std::string> uav_ids,
                                    const EconomyParams& econ);

struct CalibrationOutcome {
  std::string survivor;
  std::optional<CalibrationEntry> entry;  // set only when R̃ was actually lowered
};

/// Separates UAVs tied at the top of `schedule`'s list. `outside_option(j)` is
/// the utility j can still secure elsewhere (at least 0). Lowers the schedule's
/// R̃ vector in place. Throws UnresolvedTie after policy.max_rounds steps.
CalibrationOutcome rewards_calibration(
    ContractSchedule& schedule, std::span<const std::string> tied,
    const std::function<double(const std::string&)>& outside_option, const EconomyParams& econ,
    const CalibrationPolicy& policy);

MatchState gs_match(const Market& market, const CalibrationPolicy& policy = {});

using BlockingPair = std::pair<std::string, std::string>;  // (uav id, subregion id)

/// Every pair that strictly prefers each other to their current partners.
std::vector<BlockingPair> stability_audit(const Assignment& assignment,
                                          const PreferenceProfile& preferences);

}  // namespace uavfl
