#include "uavfl/economics.hpp"

#include <cmath>
#include <numeric>

#include "uavfl/errors.hpp"

namespace uavfl {

void validate(const EconomyParams& econ) {
  if (!(econ.phi > 0.0)) throw DomainError("economy: phi must be > 0");
  if (!(econ.mu > 0.0)) throw DomainError("economy: mu must be > 0");
  if (!(econ.sigma > 0.0)) throw DomainError("economy: sigma must be > 0");
  if (econ.n_subregions <= 0) throw DomainError("economy: n_subregions must be > 0");
}

double accuracy_log(double x, LogBase base) {
  return base == LogBase::binary ? std::log2(1.0 + x) : std::log1p(x);
}

double uav_utility(const ContractItem& item, const CostVector& costs, const EconomyParams& econ) {
  // Same association as the R̃ recursion so a binding IR lands on exactly 0.
  return revised_utility(item, costs.alpha, costs.beta, econ.phi) + item.reward_hat -
         econ.phi * (costs.psi + costs.zeta);
}

double revised_utility(const ContractItem& item, double alpha, double beta, double phi) {
  return item.reward_tilde - phi * (alpha + beta) * item.theta;
}

double model_accuracy(std::span<const CoverageEntry> coverages, double mu, LogBase base) {
  if (coverages.empty()) throw DomainError("model_accuracy: no subregions");
  double total = 0.0;
  for (const auto& c : coverages) {
    if (!(c.theta >= 0.0 && c.theta <= 1.0)) {
      throw DomainError("model_accuracy: coverage outside [0, 1]");
    }
    if (!(c.data_volume > 0.0)) throw DomainError("model_accuracy: data volume must be > 0");
    total += accuracy_log(mu * c.theta * c.data_volume, base);
  }
  return total / static_cast<double>(coverages.size());
}

double owner_profit(std::span<const CoverageEntry> coverages, std::span<const double> rewards,
                    const EconomyParams& econ) {
  if (coverages.size() != rewards.size()) {
    throw DomainError("owner_profit: " + std::to_string(coverages.size()) + " coverages but " +
                      std::to_string(rewards.size()) + " rewards");
  }
  const double paid = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  return econ.sigma * model_accuracy(coverages, econ.mu, econ.log_base) - paid;
}

double subregion_profit(double theta, double data_volume, double reward,
                        const EconomyParams& econ) {
  return econ.sigma / econ.n_subregions *
             accuracy_log(econ.mu * theta * data_volume, econ.log_base) -
         reward;
}

}  // namespace uavfl
