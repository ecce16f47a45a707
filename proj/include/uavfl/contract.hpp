#pragma once

// Per-subregion contract menu. The two coverage-dependent cost dimensions
// (sensing α, computation β) collapse onto the auxiliary type υ = φ(α+β);
// UAVs are laddered by υ and every rung gets a (θ, R̃) item. Fixed traversal
// and upload costs are compensated separately through R̂.

#include <span>
#include <string>
#include <vector>

#include "uavfl/core_model.hpp"
#include "uavfl/economics.hpp"

namespace uavfl {

inline constexpr double kAuditTolerance = 1e-9;

/// A UAV's announced cost type at one subregion.
struct Announcer {
  std::string uav_id;
  double alpha = 0.0;
  double beta = 0.0;
  double psi = 0.0;
  double zeta = 0.0;
};

struct AuxiliaryType {
  int rank = 0;  // 1 = lowest marginal cost
  std::string uav_id;
  double alpha = 0.0;
  double beta = 0.0;
  double upsilon = 0.0;
  double psi = 0.0;
  double zeta = 0.0;
};

struct AuditReport {
  bool ir_ok = false;
  bool ic_ok = false;
  bool monotone_ok = false;
  double worst_ic_violation = 0.0;  // max over i≠k of ũᵢ(ω_k) − ũᵢ(ωᵢ)
  int binding_ir_type = 0;          // rank with the smallest own-item utility
  double min_ir_utility = 0.0;

  bool ok() const { return ir_ok && ic_ok && monotone_ok; }
};

struct ContractSchedule {
  std::string subregion_id;
  std::vector<AuxiliaryType> ladder;
  std::vector<ContractItem> items;  // aligned with ladder
  double reward_hat = 0.0;
  AuditReport audit;

  std::size_t size() const { return ladder.size(); }
  /// Index into ladder/items, or npos when the UAV did not announce here.
  std::size_t position_of(const std::string& uav_id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

double marginal_cost(double alpha, double beta, double phi);

/// Non-decreasing υ; ties by lower ψ, then lower ζ, then input order.
std::vector<AuxiliaryType> sort_ladder(std::span<const Announcer> announcers, double phi);

/// Interior optimum of (σ/N)·log(1+μθD) − υθ before clamping to [0, 1].
double unclamped_coverage(double upsilon, double data_volume, const EconomyParams& econ);

double optimal_coverage(const AuxiliaryType& type, const Subregion& sub, const EconomyParams& econ);

/// Pool-adjacent-violators: least-squares non-increasing fit with equal weights.
std::vector<double> iron_schedule(std::span<const double> coverages);

/// Backward recursion from the worst type: R̃_M = υ_M θ_M,
/// R̃ᵢ = R̃ᵢ₊₁ + υᵢ(θᵢ − θᵢ₊₁). Throws PreconditionError on non-monotone input.
std::vector<ContractItem> reward_schedule(std::span<const AuxiliaryType> ladder,
                                          std::span<const double> coverages, double reward_hat,
                                          double phi);

ContractSchedule build_schedule(std::span<const Announcer> announcers, const Subregion& sub,
                                const EconomyParams& econ, double reward_hat);

/// Full M×M incentive audit. IC comparisons use the paid reward R̃ + R̂ of
/// each item so that per-item differences in R̂ would be caught; IR uses the
/// revised utility.
AuditReport audit_schedule(const ContractSchedule& schedule, double phi,
                           double tolerance = kAuditTolerance);

/// Every ladder entry tied (exactly) at the minimum υ. Throws DomainError when empty.
std::vector<AuxiliaryType> select_winner(const ContractSchedule& schedule);

}  // namespace uavfl
