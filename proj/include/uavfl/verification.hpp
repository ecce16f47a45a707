#pragma once

// Brute-force oracles that certify the analytic pieces independently of the
// code paths they check: a dense grid scan of the owner's per-subregion
// profit, explicit misreport matrices, and exhaustive enumeration of stable
// matchings. The sweeps come in two flavours: a serial reference and an
// OpenMP fan-out that must produce identical results.

#include <cstdint>
#include <vector>

#include "uavfl/contract.hpp"
#include "uavfl/economics.hpp"
#include "uavfl/matching.hpp"

namespace uavfl {

struct OracleConfig {
  int theta_grid_points = 10001;
  double tolerance = kAuditTolerance;
  int max_enum_size = 8;
};

void validate(const OracleConfig& config);

/// (σ/(NμD))·log(1+μθD) − R̂ − υθ: the owner's per-subregion profit with
/// the accuracy gain counted per unit of collected data. Its stationary point
/// is the closed-form coverage; the raw (σ/N)·log(1+μθD) profit peaks at
/// σ/(Nυ) − 1/(μD) instead, which saturates at θ = 1 for typical inputs.
double coverage_objective(double theta, double upsilon, double data_volume, double reward_hat,
                          const EconomyParams& econ);

/// Serial reference: argmax of the objective on a uniform grid over [0, 1],
/// ties resolved toward the smallest θ.
double grid_oracle_coverage(const AuxiliaryType& type, const Subregion& sub,
                            const EconomyParams& econ, int points = 10001,
                            double reward_hat = 0.0);

/// OpenMP version of grid_oracle_coverage; bit-identical result.
double grid_oracle_coverage_parallel(const AuxiliaryType& type, const Subregion& sub,
                                     const EconomyParams& econ, int points = 10001,
                                     double reward_hat = 0.0);

/// True when the objective sampled on the grid rises then falls (plateaus allowed).
bool grid_objective_unimodal(const AuxiliaryType& type, const Subregion& sub,
                             const EconomyParams& econ, int points = 10001);

using Matrix = std::vector<std::vector<double>>;

/// Entry (i, k) = ũᵢ(ω_k): revised utility of rank i taking rank k's item.
Matrix ic_matrix(const ContractSchedule& schedule, double phi);

/// Entry (i, k) = full utility of rank i (with its own ψ, ζ) taking rank k's item, R̂ included.
Matrix utility_matrix(const ContractSchedule& schedule, const EconomyParams& econ);

/// Every row's diagonal entry is within `tolerance` of the row maximum.
bool diagonal_dominant(const Matrix& m, double tolerance = kAuditTolerance);

/// Columns within `tolerance` of the maximum of `row`.
std::vector<std::size_t> row_argmax(const std::vector<double>& row,
                                    double tolerance = kAuditTolerance);

/// All stable one-to-one partial assignments. Requires strict (tie-free) lists
/// and at most `max_size` agents on either side; throws DomainError otherwise.
std::vector<Assignment> enumerate_stable_matchings(const PreferenceProfile& preferences,
                                                   int max_size = 8);

/// Every subregion weakly prefers its partner in `candidate` to its partner
/// in each of `stable` (being unmatched ranks last).
bool is_proposer_optimal(const Assignment& candidate, const std::vector<Assignment>& stable,
                         const PreferenceProfile& preferences);

/// True when no list contains two equal scores.
bool tie_free(const PreferenceProfile& preferences);

// ---------------------------------------------------------------------------
// Seeded random instances. Instance `index` of seed `seed` is the same no
// matter which thread builds it.

struct CoverageDraw {
  AuxiliaryType type;
  Subregion sub;
  EconomyParams econ;
};

/// Draw whose closed-form optimum is interior to (0, 1).
CoverageDraw random_coverage_draw(std::uint64_t seed, std::size_t index);

struct ScheduleDraw {
  ContractSchedule schedule;
  Subregion sub;
  EconomyParams econ;
};

/// Built schedule with 1..8 rungs whose worst-type coverage is strictly positive.
ScheduleDraw random_schedule(std::uint64_t seed, std::size_t index);

/// Direct-type market with up to `max_size` UAVs and subregions and partial feasibility.
Market random_market(std::uint64_t seed, std::size_t index, int max_size = 8);

struct AgreementSummary {
  std::size_t draws = 0;
  std::size_t failures = 0;
  double max_abs_error = 0.0;

  bool operator==(const AgreementSummary&) const = default;
};

/// Closed-form coverage vs grid oracle over `draws` random parameter sets.
AgreementSummary coverage_agreement_sweep(std::uint64_t seed, std::size_t draws, int points,
                                          double tolerance);
AgreementSummary coverage_agreement_sweep_parallel(std::uint64_t seed, std::size_t draws,
                                                   int points, double tolerance);

struct StabilitySummary {
  std::size_t instances = 0;
  std::size_t skipped_with_ties = 0;
  std::size_t blocking = 0;         // gs output had a blocking pair
  std::size_t not_enumerated = 0;   // gs output missing from the stable set
  std::size_t not_optimal = 0;      // gs output not subregion-optimal
  std::size_t errors = 0;           // instance threw (e.g. an unresolved tie)

  std::size_t failures() const { return blocking + not_enumerated + not_optimal + errors; }
  bool operator==(const StabilitySummary&) const = default;
};

StabilitySummary stability_sweep(std::uint64_t seed, std::size_t instances, int max_size = 8);
StabilitySummary stability_sweep_parallel(std::uint64_t seed, std::size_t instances,
                                          int max_size = 8);

}  // namespace uavfl
