#pragma once

// Physical, geometric and federated-learning cost model for one UAV serving
// one subregion. Everything here is a pure function of its inputs.

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace uavfl {

struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Position&) const = default;
};

double distance(const Position& a, const Position& b);

struct Subregion {
  std::string id;
  Position center;
  double full_distance = 0.0;  // lⁿ, metres flown when every node is covered
  double data_volume = 0.0;    // Dⁿ, data units collected at full coverage
  double rate_factor = 1.0;    // λⁿ, dimensionless rate multiplier
  double deadline = std::numeric_limits<double>::infinity();  // τ̄ₙ, seconds
  std::vector<Position> nodes;

  bool operator==(const Subregion&) const = default;
};

/// Throws DomainError naming the first violated invariant.
void validate(const Subregion& sub);

struct DirectPower {
  double watts = 0.0;
  bool operator==(const DirectPower&) const = default;
};

/// Rotor-craft drag model: p = c1·v³ + c2/v.
struct DragCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  bool operator==(const DragCoefficients&) const = default;
};

using Propulsion = std::variant<DirectPower, DragCoefficients>;

struct UavProfile {
  std::string id;
  Position base;
  double velocity = 0.0;  // m/s
  Propulsion propulsion = DirectPower{};
  double cycles_per_bit = 0.0;
  double cpu_freq = 0.0;          // cycles/s
  double capacitance = 0.0;       // κ
  double transmit_power = 0.0;    // ρ, watts
  double energy_capacity = 0.0;   // E_j, joules

  bool operator==(const UavProfile&) const = default;
};

/// Throws InvalidProfile naming the first violated invariant.
void validate(const UavProfile& profile);

struct FlHyperParams {
  double lipschitz = 4.0;
  double strong_convexity = 2.0;  // γ
  double xi = 1.0 / 3.0;
  double delta = 0.25;
  double local_accuracy = 0.6;    // A*
  double update_size = 1.0;       // H
  std::optional<int> rounds_override;

  bool operator==(const FlHyperParams&) const = default;
};

/// Throws InvalidHyperParameter naming the first violated invariant.
void validate(const FlHyperParams& fl);

struct FlRounds {
  double local_iterations = 0.0;  // V
  double a = 0.0;
  int global_rounds = 0;          // K
};

struct TraversalPhase {
  double time = 0.0;    // τ_P
  double energy = 0.0;  // E_P
  double alpha = 0.0;
  double psi = 0.0;
};

struct ComputationPhase {
  double time = 0.0;    // τ_C
  double energy = 0.0;  // E_C
  double beta = 0.0;
};

struct TransmissionPhase {
  double time = 0.0;  // τ_T
  double zeta = 0.0;  // E_T
};

/// Per-(UAV, subregion) cost coefficients. Energies in joules; times are the
/// full-coverage (θ = 1) values except tau_t, which does not depend on θ.
struct CostVector {
  double alpha = 0.0;
  double beta = 0.0;
  double psi = 0.0;
  double zeta = 0.0;
  double tau_p_full = 0.0;
  double tau_c_full = 0.0;
  double tau_t = 0.0;

  bool operator==(const CostVector&) const = default;
};

struct FeasibilityReport {
  bool time_ok = false;
  bool energy_ok = false;
  double total_time_at_theta_hat = 0.0;
  double total_energy_at_theta_hat = 0.0;

  bool feasible() const { return time_ok && energy_ok; }
};

inline constexpr double kDefaultThetaHat = 0.8;

double propulsion_power(const UavProfile& profile);

TraversalPhase traversal_phase(double theta, const Subregion& sub, const UavProfile& profile);

FlRounds fl_rounds(const FlHyperParams& fl);

ComputationPhase computation_phase(double theta, const Subregion& sub, const UavProfile& profile,
                                   const FlHyperParams& fl);

TransmissionPhase transmission_phase(const Subregion& sub, const UavProfile& profile,
                                     const FlHyperParams& fl);

CostVector derive_cost_vector(const Subregion& sub, const UavProfile& profile,
                              const FlHyperParams& fl);

/// Announcement gate: a UAV announces its type to a subregion
/// only if it can cover θ̂ of it within both the deadline and its battery.
FeasibilityReport check_feasibility(const Subregion& sub, const UavProfile& profile,
                                    const FlHyperParams& fl,
                                    double theta_hat = kDefaultThetaHat);

}  // namespace uavfl
