#include "uavfl/core_model.hpp"

#include <cmath>
#include <string>

#include "uavfl/errors.hpp"

namespace uavfl {

namespace {

bool finite(const Position& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

void require_unit_interval(double theta, const char* op) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError(std::string(op) + ": coverage " + std::to_string(theta) +
                      " outside [0, 1]");
  }
}

}  // namespace

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

void validate(const Subregion& sub) {
  const std::string where = "subregion '" + sub.id + "': ";
  if (!finite(sub.center)) throw DomainError(where + "center is not finite");
  if (!(sub.full_distance > 0.0)) throw DomainError(where + "full_distance must be > 0");
  if (!(sub.data_volume > 0.0)) throw DomainError(where + "data_volume must be > 0");
  if (!(sub.rate_factor > 0.0)) throw DomainError(where + "rate_factor must be > 0");
  if (!(sub.deadline > 0.0)) throw DomainError(where + "deadline must be > 0");
  for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
    if (!finite(sub.nodes[i])) {
      throw DomainError(where + "node " + std::to_string(i) + " is not finite");
    }
  }
  for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
    for (std::size_t k = i + 1; k < sub.nodes.size(); ++k) {
      if (!std::isfinite(distance(sub.nodes[i], sub.nodes[k]))) {
        throw DomainError(where + "nodes " + std::to_string(i) + " and " + std::to_string(k) +
                          " are not inter-accessible");
      }
    }
  }
}

void validate(const UavProfile& profile) {
  const std::string where = "uav '" + profile.id + "': ";
  if (!finite(profile.base)) throw InvalidProfile(where + "base is not finite");
  if (!(profile.velocity > 0.0)) throw InvalidProfile(where + "velocity must be > 0");
  if (const auto* drag = std::get_if<DragCoefficients>(&profile.propulsion)) {
    if (drag->c1 < 0.0 || drag->c2 < 0.0) {
      throw InvalidProfile(where + "drag coefficients must be >= 0");
    }
    if (drag->c1 == 0.0 && drag->c2 == 0.0) {
      throw InvalidProfile(where + "drag coefficients are both zero");
    }
  }
  if (!(profile.cycles_per_bit > 0.0)) throw InvalidProfile(where + "cycles_per_bit must be > 0");
  if (!(profile.cpu_freq > 0.0)) throw InvalidProfile(where + "cpu_freq must be > 0");
  if (!(profile.capacitance > 0.0)) throw InvalidProfile(where + "capacitance must be > 0");
  if (!(profile.transmit_power > 0.0)) throw InvalidProfile(where + "transmit_power must be > 0");
  if (!(profile.energy_capacity > 0.0)) {
    throw InvalidProfile(where + "energy_capacity must be > 0");
  }
}

void validate(const FlHyperParams& fl) {
  if (!(fl.lipschitz > 0.0)) throw InvalidHyperParameter("lipschitz must be > 0");
  if (!(fl.strong_convexity > 0.0)) throw InvalidHyperParameter("strong_convexity must be > 0");
  if (!(fl.xi > 0.0 && fl.xi <= fl.strong_convexity / fl.lipschitz)) {
    throw InvalidHyperParameter("xi must lie in (0, strong_convexity / lipschitz]");
  }
  if (!(fl.delta > 0.0)) throw InvalidHyperParameter("delta must be > 0");
  if (!(fl.local_accuracy > 0.0 && fl.local_accuracy < 1.0)) {
    throw InvalidHyperParameter("local_accuracy must lie in (0, 1)");
  }
  if (!(fl.update_size > 0.0)) throw InvalidHyperParameter("update_size must be > 0");
  if (fl.rounds_override && *fl.rounds_override <= 0) {
    throw InvalidHyperParameter("rounds_override must be a positive integer");
  }
  if (!((2.0 - fl.lipschitz * fl.delta) * fl.delta * fl.strong_convexity > 0.0)) {
    throw InvalidHyperParameter("(2 - L*delta)*delta*gamma must be > 0");
  }
}

double propulsion_power(const UavProfile& profile) {
  double power = 0.0;
  if (const auto* direct = std::get_if<DirectPower>(&profile.propulsion)) {
    power = direct->watts;
  } else {
    const auto& drag = std::get<DragCoefficients>(profile.propulsion);
    if (!(profile.velocity > 0.0)) {
      throw InvalidProfile("uav '" + profile.id + "': velocity must be > 0");
    }
    const double v = profile.velocity;
    power = drag.c1 * v * v * v + drag.c2 / v;
  }
  if (!(power > 0.0) || !std::isfinite(power)) {
    throw InvalidProfile("uav '" + profile.id + "': propulsion power must be positive and finite");
  }
  return power;
}

TraversalPhase traversal_phase(double theta, const Subregion& sub, const UavProfile& profile) {
  require_unit_interval(theta, "traversal_phase");
  const double p = propulsion_power(profile);
  const double v = profile.velocity;
  const double approach = distance(profile.base, sub.center);

  TraversalPhase out;
  out.time = (theta * sub.full_distance + approach) / v;
  out.energy = out.time * p;
  out.alpha = p * sub.full_distance / v;
  out.psi = p * approach / v;
  return out;
}

FlRounds fl_rounds(const FlHyperParams& fl) {
  const double denom = (2.0 - fl.lipschitz * fl.delta) * fl.delta * fl.strong_convexity;
  if (!(denom > 0.0)) {
    throw InvalidHyperParameter("(2 - L*delta)*delta*gamma must be > 0");
  }
  FlRounds out;
  out.local_iterations = 2.0 / denom;
  out.a = 2.0 * fl.lipschitz * fl.lipschitz /
          (fl.strong_convexity * fl.strong_convexity * fl.xi);
  if (fl.rounds_override) {
    out.global_rounds = *fl.rounds_override;
  } else {
    out.global_rounds = static_cast<int>(std::ceil(out.a / (1.0 - fl.local_accuracy)));
  }
  return out;
}

ComputationPhase computation_phase(double theta, const Subregion& sub, const UavProfile& profile,
                                   const FlHyperParams& fl) {
  require_unit_interval(theta, "computation_phase");
  const FlRounds rounds = fl_rounds(fl);
  const double k = rounds.global_rounds;
  const double iterations = rounds.local_iterations * std::log2(1.0 / fl.local_accuracy);
  const double cycles_full = profile.cycles_per_bit * sub.data_volume * iterations;  // per round

  ComputationPhase out;
  out.beta = k * profile.capacitance * cycles_full * profile.cpu_freq * profile.cpu_freq;
  out.time = k * cycles_full * theta / profile.cpu_freq;
  out.energy = out.beta * theta;
  return out;
}

TransmissionPhase transmission_phase(const Subregion& sub, const UavProfile& profile,
                                     const FlHyperParams& fl) {
  const double k = fl_rounds(fl).global_rounds;
  TransmissionPhase out;
  out.time = k * fl.update_size / (sub.rate_factor * profile.transmit_power);
  out.zeta = out.time * profile.transmit_power;
  return out;
}

CostVector derive_cost_vector(const Subregion& sub, const UavProfile& profile,
                              const FlHyperParams& fl) {
  const TraversalPhase traversal = traversal_phase(1.0, sub, profile);
  const ComputationPhase compute = computation_phase(1.0, sub, profile, fl);
  const TransmissionPhase upload = transmission_phase(sub, profile, fl);

  CostVector out;
  out.alpha = traversal.alpha;
  out.beta = compute.beta;
  out.psi = traversal.psi;
  out.zeta = upload.zeta;
  out.tau_p_full = traversal.time;
  out.tau_c_full = compute.time;
  out.tau_t = upload.time;
  return out;
}

FeasibilityReport check_feasibility(const Subregion& sub, const UavProfile& profile,
                                    const FlHyperParams& fl, double theta_hat) {
  if (!(theta_hat > 0.0 && theta_hat <= 1.0)) {
    throw DomainError("check_feasibility: theta_hat " + std::to_string(theta_hat) +
                      " outside (0, 1]");
  }
  const TraversalPhase traversal = traversal_phase(theta_hat, sub, profile);
  const ComputationPhase compute = computation_phase(theta_hat, sub, profile, fl);
  const TransmissionPhase upload = transmission_phase(sub, profile, fl);

  FeasibilityReport out;
  out.total_time_at_theta_hat = traversal.time + compute.time + upload.time;
  out.total_energy_at_theta_hat = traversal.energy + compute.energy + upload.zeta;
  out.time_ok = out.total_time_at_theta_hat <= sub.deadline;
  out.energy_ok = out.total_energy_at_theta_hat <= profile.energy_capacity;
  return out;
}

}  // namespace uavfl
