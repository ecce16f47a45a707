#include "uavfl/contract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uavfl/errors.hpp"

namespace uavfl {

std::size_t ContractSchedule::position_of(const std::string& uav_id) const {
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i].uav_id == uav_id) return i;
  }
  return npos;
}

double marginal_cost(double alpha, double beta, double phi) { return phi * (alpha + beta); }

std::vector<AuxiliaryType> sort_ladder(std::span<const Announcer> announcers, double phi) {
  if (announcers.empty()) throw DomainError("sort_ladder: no announcers");

  std::vector<AuxiliaryType> ladder;
  ladder.reserve(announcers.size());
  for (const auto& a : announcers) {
    AuxiliaryType t;
    t.uav_id = a.uav_id;
    t.alpha = a.alpha;
    t.beta = a.beta;
    t.upsilon = marginal_cost(a.alpha, a.beta, phi);
    t.psi = a.psi;
    t.zeta = a.zeta;
    if (!(t.upsilon > 0.0)) {
      throw DomainError("sort_ladder: uav '" + a.uav_id + "' has non-positive marginal cost");
    }
    ladder.push_back(std::move(t));
  }
  std::stable_sort(ladder.begin(), ladder.end(), [](const AuxiliaryType& l, const AuxiliaryType& r) {
    if (l.upsilon != r.upsilon) return l.upsilon < r.upsilon;
    if (l.psi != r.psi) return l.psi < r.psi;
    return l.zeta < r.zeta;
  });
  for (std::size_t i = 0; i < ladder.size(); ++i) ladder[i].rank = static_cast<int>(i) + 1;
  return ladder;
}

double unclamped_coverage(double upsilon, double data_volume, const EconomyParams& econ) {
  // d/dθ of (σ/N)·log_b(1+μθD) is (σ/(N ln b))·μD/(1+μθD).
  const double sigma_eff =
      econ.log_base == LogBase::binary ? econ.sigma / std::log(2.0) : econ.sigma;
  return (sigma_eff / (econ.n_subregions * upsilon) - 1.0) / (econ.mu * data_volume);
}

double optimal_coverage(const AuxiliaryType& type, const Subregion& sub,
                        const EconomyParams& econ) {
  return std::clamp(unclamped_coverage(type.upsilon, sub.data_volume, econ), 0.0, 1.0);
}

std::vector<double> iron_schedule(std::span<const double> coverages) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(coverages.size());
  for (double c : coverages) {
    blocks.push_back({c, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
      Block last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().count += last.count;
    }
  }
  std::vector<double> out;
  out.reserve(coverages.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

std::vector<ContractItem> reward_schedule(std::span<const AuxiliaryType> ladder,
                                          std::span<const double> coverages, double reward_hat,
                                          double phi) {
  if (ladder.size() != coverages.size()) {
    throw PreconditionError("reward_schedule: ladder and coverage lengths differ");
  }
  for (std::size_t i = 1; i < coverages.size(); ++i) {
    if (coverages[i] > coverages[i - 1]) {
      throw PreconditionError("reward_schedule: coverages increase at rank " +
                              std::to_string(i + 1) + "; iron them first");
    }
  }
  const std::size_t m = ladder.size();
  std::vector<ContractItem> items(m);
  for (std::size_t back = 0; back < m; ++back) {
    const std::size_t i = m - 1 - back;
    const double upsilon = marginal_cost(ladder[i].alpha, ladder[i].beta, phi);
    items[i].theta = coverages[i];
    items[i].reward_hat = reward_hat;
    if (i == m - 1) {
      items[i].reward_tilde = upsilon * coverages[i];
    } else {
      items[i].reward_tilde =
          items[i + 1].reward_tilde + upsilon * (coverages[i] - coverages[i + 1]);
    }
  }
  return items;
}

ContractSchedule build_schedule(std::span<const Announcer> announcers, const Subregion& sub,
                                const EconomyParams& econ, double reward_hat) {
  ContractSchedule schedule;
  schedule.subregion_id = sub.id;
  schedule.reward_hat = reward_hat;
  schedule.ladder = sort_ladder(announcers, econ.phi);

  std::vector<double> coverages;
  coverages.reserve(schedule.ladder.size());
  for (const auto& t : schedule.ladder) coverages.push_back(optimal_coverage(t, sub, econ));
  const std::vector<double> ironed = iron_schedule(coverages);

  schedule.items = reward_schedule(schedule.ladder, ironed, reward_hat, econ.phi);
  schedule.audit = audit_schedule(schedule, econ.phi);
  return schedule;
}

AuditReport audit_schedule(const ContractSchedule& schedule, double phi, double tolerance) {
  AuditReport report;
  const std::size_t m = schedule.items.size();
  if (m == 0 || m != schedule.ladder.size()) {
    report.ir_ok = report.ic_ok = report.monotone_ok = (m == 0 && schedule.ladder.empty());
    return report;
  }

  report.min_ir_utility = std::numeric_limits<double>::infinity();
  report.worst_ic_violation = m == 1 ? 0.0 : -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& type = schedule.ladder[i];
    const double own_revised =
        revised_utility(schedule.items[i], type.alpha, type.beta, phi);
    // Ties keep the highest rank: the worst type is the one expected to bind.
    if (own_revised <= report.min_ir_utility) {
      report.min_ir_utility = own_revised;
      report.binding_ir_type = type.rank;
    }
    const double own_paid = own_revised + schedule.items[i].reward_hat;
    for (std::size_t k = 0; k < m; ++k) {
      if (k == i) continue;
      const double other_paid =
          revised_utility(schedule.items[k], type.alpha, type.beta, phi) +
          schedule.items[k].reward_hat;
      report.worst_ic_violation = std::max(report.worst_ic_violation, other_paid - own_paid);
    }
  }
  report.ir_ok = report.min_ir_utility >= -tolerance;
  report.ic_ok = report.worst_ic_violation <= tolerance;

  report.monotone_ok = true;
  for (std::size_t i = 1; i < m; ++i) {
    if (schedule.items[i].theta > schedule.items[i - 1].theta ||
        schedule.items[i].reward_tilde > schedule.items[i - 1].reward_tilde) {
      report.monotone_ok = false;
    }
  }
  return report;
}

std::vector<AuxiliaryType> select_winner(const ContractSchedule& schedule) {
  if (schedule.ladder.empty()) {
    throw DomainError("select_winner: subregion '" + schedule.subregion_id + "' has no announcers");
  }
  const double best = schedule.ladder.front().upsilon;
  std::vector<AuxiliaryType> winners;
  for (const auto& t : schedule.ladder) {
    if (t.upsilon == best) winners.push_back(t);
  }
  return winners;
}

}  // namespace uavfl
