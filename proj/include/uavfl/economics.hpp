#pragma once

#include <span>

#include "uavfl/core_model.hpp"

namespace uavfl {

/// One (coverage, reward) bundle. The paid reward is reward_tilde + reward_hat:
/// reward_tilde compensates the coverage-dependent cost, reward_hat the fixed
/// traversal and upload cost.
struct ContractItem {
  double theta = 0.0;
  double reward_tilde = 0.0;
  double reward_hat = 0.0;

  double reward() const { return reward_tilde + reward_hat; }
  bool operator==(const ContractItem&) const = default;
};

enum class LogBase { natural, binary };

struct EconomyParams {
  double phi = 0.05;     // unit energy cost
  double mu = 1.0;
  double sigma = 1.0;    // accuracy-to-profit conversion
  int n_subregions = 1;  // N
  LogBase log_base = LogBase::natural;

  bool operator==(const EconomyParams&) const = default;
};

/// Throws DomainError on a non-positive parameter.
void validate(const EconomyParams& econ);

/// log(1 + x) in the configured base.
double accuracy_log(double x, LogBase base);

/// Full UAV utility: paid reward minus φ times the energy of all three phases.
double uav_utility(const ContractItem& item, const CostVector& costs, const EconomyParams& econ);

/// Utility net of the fixed compensation and the fixed costs: R̃ − φ(α+β)θ.
double revised_utility(const ContractItem& item, double alpha, double beta, double phi);

struct CoverageEntry {
  double theta = 0.0;
  double data_volume = 0.0;
};

/// Mean of log(1 + μ·θⁿ·Dⁿ) over subregions.
double model_accuracy(std::span<const CoverageEntry> coverages, double mu,
                      LogBase base = LogBase::natural);

/// σ·Υ − ΣR.
double owner_profit(std::span<const CoverageEntry> coverages, std::span<const double> rewards,
                    const EconomyParams& econ);

/// One subregion's share of the owner profit, (σ/N)·log(1 + μθD) − R.
double subregion_profit(double theta, double data_volume, double reward, const EconomyParams& econ);

}  // namespace uavfl
