#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace uavfl {

/// Argument outside the mathematical domain of an operation (θ ∉ [0,1], empty input, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A UAV profile whose propulsion or compute parameters are unusable.
class InvalidProfile : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// FL hyper-parameters that make the iteration bounds non-positive or infinite.
class InvalidHyperParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition (e.g. non-monotone coverages fed to the reward recursion).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Rewards calibration could not separate tied UAVs within the allowed number of rounds.
class UnresolvedTie : public std::runtime_error {
 public:
  UnresolvedTie(std::string subregion_id, const std::string& what)
      : std::runtime_error(what), subregion_id_(std::move(subregion_id)) {}

  const std::string& subregion_id() const noexcept { return subregion_id_; }

 private:
  std::string subregion_id_;
};

/// Scenario file could not be parsed or failed validation. Carries every violation found.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out;
    for (const auto& p : problems) {
      if (!out.empty()) out += "\n";
      out += p;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace uavfl
