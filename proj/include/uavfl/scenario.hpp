#pragma once

// Scenario documents: JSON text with `"format_version": 1`. Unknown keys are
// rejected so fixtures cannot drift silently. The format is described in README.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uavfl/core_model.hpp"
#include "uavfl/economics.hpp"
#include "uavfl/matching.hpp"

namespace uavfl {

inline constexpr int kScenarioFormatVersion = 1;

/// Cost terms stated directly instead of derived from the physical model.
/// Any term left unset is derived (which needs a physical profile).
struct DeclaredCosts {
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> psi;
  std::optional<double> zeta;

  bool empty() const { return !alpha && !beta && !psi && !zeta; }
  bool complete() const { return alpha && beta && psi && zeta; }
  /// Fields of `this` win; unset ones fall back to `base`.
  DeclaredCosts over(const DeclaredCosts& base) const;
  bool operator==(const DeclaredCosts&) const = default;
};

struct UavEntry {
  std::string id;
  std::optional<UavProfile> profile;  // absent: every cost is declared, feasibility assumed
  DeclaredCosts declared;
  std::map<std::string, DeclaredCosts> declared_per_subregion;

  bool operator==(const UavEntry&) const = default;
};

struct SubregionEntry {
  Subregion sub;
  std::optional<double> reward_hat;          // overrides the scenario policy
  std::vector<double> posted_reward_tilde;   // replaces the computed R̃ by rank when non-empty

  bool operator==(const SubregionEntry&) const = default;
};

struct FixedRewardHat {
  double value = 0.0;
  bool operator==(const FixedRewardHat&) const = default;
};

/// R̂ = φ·(ψ_ref + ζ_ref).
struct ReferenceRewardHat {
  double psi_ref = 0.0;
  double zeta_ref = 0.0;
  bool operator==(const ReferenceRewardHat&) const = default;
};

using RewardHatPolicy = std::variant<FixedRewardHat, ReferenceRewardHat>;

struct Scenario {
  std::string name;
  EconomyParams economy;
  FlHyperParams fl;
  double theta_hat = kDefaultThetaHat;
  RewardHatPolicy reward_hat = FixedRewardHat{};
  std::vector<SubregionEntry> subregions;
  std::vector<UavEntry> uavs;
  CalibrationPolicy calibration;
  std::uint64_t seed = 0;

  bool operator==(const Scenario&) const = default;
};

/// Throws ScenarioError listing every violated invariant with its field path.
void validate(const Scenario& scenario);

/// Parses and validates. Throws ScenarioError (with line/column for syntax errors).
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON text; parse_scenario(write_scenario(s)) == s.
std::string write_scenario(const Scenario& scenario);

double reward_hat_for(const Scenario& scenario, const SubregionEntry& entry);

}  // namespace uavfl
