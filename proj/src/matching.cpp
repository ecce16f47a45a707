#include "uavfl/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uavfl/errors.hpp"

namespace uavfl {

bool PreferenceList::contains(const std::string& id) const {
  return std::find(ranked.begin(), ranked.end(), id) != ranked.end();
}

std::optional<double> PreferenceList::score_of(const std::string& id) const {
  const auto it = std::find(ranked.begin(), ranked.end(), id);
  if (it == ranked.end()) return std::nullopt;
  return scores[static_cast<std::size_t>(it - ranked.begin())];
}

namespace {

const PreferenceList& find_list(const std::vector<PreferenceList>& lists, const std::string& id) {
  for (const auto& l : lists) {
    if (l.owner == id) return l;
  }
  throw DomainError("no preference list for '" + id + "'");
}

}  // namespace

const PreferenceList& PreferenceProfile::subregion(const std::string& id) const {
  return find_list(subregions, id);
}

const PreferenceList& PreferenceProfile::uav(const std::string& id) const {
  return find_list(uavs, id);
}

void validate(const CalibrationPolicy& policy) {
  if (!(policy.delta > 0.0)) throw DomainError("calibration: delta must be > 0");
  if (policy.mode == CalibrationPolicy::Mode::relative && !(policy.delta < 1.0)) {
    throw DomainError("calibration: relative delta must be < 1");
  }
  if (policy.max_rounds <= 0) throw DomainError("calibration: max_rounds must be > 0");
}

std::optional<std::string> MatchState::subregion_of(const std::string& uav_id) const {
  const auto it = assignment.find(uav_id);
  if (it == assignment.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> MatchState::uav_of(const std::string& subregion_id) const {
  for (const auto& [uav, sub] : assignment) {
    if (sub == subregion_id) return uav;
  }
  return std::nullopt;
}

std::optional<double> hypothetical_utility(const ContractSchedule& schedule,
                                           const std::string& uav_id, const EconomyParams& econ) {
  const std::size_t pos = schedule.position_of(uav_id);
  if (pos == ContractSchedule::npos) return std::nullopt;
  const auto& type = schedule.ladder[pos];
  CostVector costs;
  costs.alpha = type.alpha;
  costs.beta = type.beta;
  costs.psi = type.psi;
  costs.zeta = type.zeta;
  return uav_utility(schedule.items[pos], costs, econ);
}

PreferenceList build_subregion_preferences(const Subregion& sub,
                                           std::span<const Announcer> announcers, double phi) {
  PreferenceList list;
  list.owner = sub.id;
  if (announcers.empty()) return list;
  for (const auto& t : sort_ladder(announcers, phi)) {
    list.ranked.push_back(t.uav_id);
    list.scores.push_back(t.upsilon);
  }
  return list;
}

PreferenceList build_subregion_preferences(const ContractSchedule& schedule) {
  PreferenceList list;
  list.owner = schedule.subregion_id;
  for (const auto& t : schedule.ladder) {
    list.ranked.push_back(t.uav_id);
    list.scores.push_back(t.upsilon);
  }
  return list;
}

PreferenceList build_uav_preferences(const std::string& uav_id,
                                     std::span<const ContractSchedule> schedules,
                                     const EconomyParams& econ) {
  struct Option {
    std::size_t order;
    double utility;
  };
  std::vector<Option> options;
  for (std::size_t n = 0; n < schedules.size(); ++n) {
    const auto u = hypothetical_utility(schedules[n], uav_id, econ);
    if (u && *u >= 0.0) options.push_back({n, *u});
  }
  std::stable_sort(options.begin(), options.end(),
                   [](const Option& l, const Option& r) { return l.utility > r.utility; });

  PreferenceList list;
  list.owner = uav_id;
  for (const auto& o : options) {
    list.ranked.push_back(schedules[o.order].subregion_id);
    list.scores.push_back(o.utility);
  }
  return list;
}

PreferenceProfile build_preferences(std::span<const ContractSchedule> schedules,
                                    std::span<const std::string> uav_ids,
                                    const EconomyParams& econ) {
  PreferenceProfile profile;
  for (const auto& s : schedules) profile.subregions.push_back(build_subregion_preferences(s));
  for (const auto& j : uav_ids) profile.uavs.push_back(build_uav_preferences(j, schedules, econ));
  return profile;
}

namespace {

std::vector<double> reward_vector(const ContractSchedule& schedule) {
  std::vector<double> out;
  out.reserve(schedule.items.size());
  for (const auto& item : schedule.items) out.push_back(item.reward_tilde);
  return out;
}

bool at_floor(const ContractSchedule& schedule) {
  return std::all_of(schedule.items.begin(), schedule.items.end(),
                     [](const ContractItem& i) { return i.reward_tilde <= 0.0; });
}

void lower_rewards(ContractSchedule& schedule, const CalibrationPolicy& policy) {
  for (auto& item : schedule.items) {
    if (policy.mode == CalibrationPolicy::Mode::relative) {
      item.reward_tilde *= 1.0 - policy.delta;
    } else {
      item.reward_tilde = std::max(0.0, item.reward_tilde - policy.delta);
    }
  }
}

// Lowest ψ, then lowest ζ, then ladder order.
std::string fixed_cost_tie_break(const ContractSchedule& schedule,
                                 const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_pos = ContractSchedule::npos;
  for (const auto& id : candidates) {
    const std::size_t pos = schedule.position_of(id);
    if (best_pos == ContractSchedule::npos) {
      best = id;
      best_pos = pos;
      continue;
    }
    const auto& cur = schedule.ladder[pos];
    const auto& inc = schedule.ladder[best_pos];
    const bool better = cur.psi < inc.psi || (cur.psi == inc.psi && cur.zeta < inc.zeta) ||
                        (cur.psi == inc.psi && cur.zeta == inc.zeta && pos < best_pos);
    if (better) {
      best = id;
      best_pos = pos;
    }
  }
  return best;
}

}  // namespace

CalibrationOutcome rewards_calibration(
    ContractSchedule& schedule, std::span<const std::string> tied,
    const std::function<double(const std::string&)>& outside_option, const EconomyParams& econ,
    const CalibrationPolicy& policy) {
  if (tied.empty()) {
    throw PreconditionError("rewards_calibration: no candidates at '" + schedule.subregion_id + "'");
  }
  if (tied.size() == 1) return {tied.front(), std::nullopt};

  std::vector<std::string> candidates(tied.begin(), tied.end());
  const std::vector<double> before = reward_vector(schedule);
  int steps = 0;
  std::string survivor;
  ContractSchedule previous;

  while (true) {
    std::vector<std::string> keep;
    double best_margin = -std::numeric_limits<double>::infinity();
    std::vector<std::string> best_margin_ids;
    for (const auto& j : candidates) {
      const auto here = hypothetical_utility(schedule, j, econ);
      if (!here) {
        throw PreconditionError("rewards_calibration: uav '" + j + "' is not on the ladder of '" +
                                schedule.subregion_id + "'");
      }
      const double margin = *here - std::max(0.0, outside_option(j));
      if (margin > 0.0) keep.push_back(j);
      if (margin > best_margin) {
        best_margin = margin;
        best_margin_ids = {j};
      } else if (margin == best_margin) {
        best_margin_ids.push_back(j);
      }
    }

    if (keep.size() == 1) {
      survivor = keep.front();
      break;
    }
    if (keep.empty()) {
      if (steps > 0) {
        // The last step pushed every candidate out; undo it and break the tie on fixed costs.
        schedule = previous;
        --steps;
        survivor = fixed_cost_tie_break(schedule, candidates);
      } else {
        // Everyone already prefers leaving; the least reluctant one stays.
        survivor = fixed_cost_tie_break(schedule, best_margin_ids);
      }
      break;
    }
    candidates = std::move(keep);
    if (at_floor(schedule)) {
      survivor = fixed_cost_tie_break(schedule, candidates);
      break;
    }
    if (steps >= policy.max_rounds) {
      throw UnresolvedTie(schedule.subregion_id,
                          "rewards calibration at subregion '" + schedule.subregion_id +
                              "' left " + std::to_string(candidates.size()) + " UAVs tied after " +
                              std::to_string(steps) + " rounds");
    }
    previous = schedule;
    lower_rewards(schedule, policy);
    ++steps;
  }

  CalibrationOutcome outcome;
  outcome.survivor = survivor;
  if (steps > 0) {
    schedule.audit = audit_schedule(schedule, econ.phi);
    CalibrationEntry entry;
    entry.subregion_id = schedule.subregion_id;
    entry.tied.assign(tied.begin(), tied.end());
    entry.survivor = survivor;
    entry.steps = steps;
    entry.before = before;
    entry.after = reward_vector(schedule);
    outcome.entry = std::move(entry);
  }
  return outcome;
}

MatchState gs_match(const Market& market, const CalibrationPolicy& policy) {
  validate(policy);
  const std::size_t n_subs = market.schedules.size();

  MatchState state;
  state.schedules = market.schedules;
  auto& schedules = state.schedules;

  // UAVs each subregion may still propose to, in ladder order.
  std::vector<std::vector<std::string>> remaining(n_subs);
  for (std::size_t n = 0; n < n_subs; ++n) {
    for (const auto& t : schedules[n].ladder) remaining[n].push_back(t.uav_id);
  }
  std::vector<std::optional<std::string>> holder(n_subs);
  std::map<std::string, std::size_t> held;  // uav -> subregion index

  auto upsilon_at = [&](std::size_t n, const std::string& j) {
    return schedules[n].ladder[schedules[n].position_of(j)].upsilon;
  };
  auto drop = [&](std::size_t n, const std::string& j) {
    auto& list = remaining[n];
    list.erase(std::remove(list.begin(), list.end(), j), list.end());
  };
  auto outside_option_for = [&](std::size_t n) {
    return [&, n](const std::string& j) {
      double best = 0.0;
      for (std::size_t other = 0; other < n_subs; ++other) {
        if (other == n) continue;
        if (std::find(remaining[other].begin(), remaining[other].end(), j) ==
            remaining[other].end()) {
          continue;
        }
        if (const auto u = hypothetical_utility(schedules[other], j, market.econ)) {
          best = std::max(best, *u);
        }
      }
      return best;
    };
  };

  while (true) {
    std::map<std::string, std::vector<std::size_t>> proposals;
    bool proposed = false;
    for (std::size_t n = 0; n < n_subs; ++n) {
      if (holder[n] || remaining[n].empty()) continue;
      proposed = true;

      const double top = upsilon_at(n, remaining[n].front());
      std::vector<std::string> tied;
      for (const auto& j : remaining[n]) {
        if (upsilon_at(n, j) != top) break;
        tied.push_back(j);
      }
      std::string target = tied.front();
      if (tied.size() > 1) {
        auto outcome = rewards_calibration(schedules[n], tied, outside_option_for(n),
                                           market.econ, policy);
        target = outcome.survivor;
        if (outcome.entry) state.calibration_log.push_back(std::move(*outcome.entry));
      }
      proposals[target].push_back(n);
    }
    if (!proposed) break;
    ++state.rounds;

    for (const auto& j : market.uav_ids) {
      const auto it = proposals.find(j);
      if (it == proposals.end()) continue;

      std::vector<std::size_t> candidates;
      if (const auto h = held.find(j); h != held.end()) candidates.push_back(h->second);
      candidates.insert(candidates.end(), it->second.begin(), it->second.end());

      std::optional<std::size_t> best;
      double best_u = 0.0;
      for (std::size_t n : candidates) {
        const auto u = hypothetical_utility(schedules[n], j, market.econ);
        if (!u || *u < 0.0) continue;
        if (!best || *u > best_u) {
          best = n;
          best_u = *u;
        }
      }
      for (std::size_t n : candidates) {
        if (best && n == *best) continue;
        drop(n, j);
        if (holder[n] == j) holder[n].reset();
      }
      if (best) {
        holder[*best] = j;
        held[j] = *best;
      } else {
        held.erase(j);
      }
    }
  }

  for (std::size_t n = 0; n < n_subs; ++n) {
    const auto& id = schedules[n].subregion_id;
    if (holder[n]) {
      state.assignment[*holder[n]] = id;
    } else {
      state.unmatched_subregions.insert(id);
      if (remaining[n].empty()) state.exhausted.insert(id);
    }
  }
  return state;
}

std::vector<BlockingPair> stability_audit(const Assignment& assignment,
                                          const PreferenceProfile& preferences) {
  std::map<std::string, std::string> partner_of_sub;
  for (const auto& [uav, sub] : assignment) partner_of_sub[sub] = uav;

  std::vector<BlockingPair> blocking;
  for (const auto& uav_list : preferences.uavs) {
    const std::string& j = uav_list.owner;
    const auto current = assignment.find(j);
    const std::optional<double> j_current =
        current == assignment.end() ? std::nullopt : uav_list.score_of(current->second);

    for (std::size_t r = 0; r < uav_list.ranked.size(); ++r) {
      const std::string& n = uav_list.ranked[r];
      if (current != assignment.end() && current->second == n) continue;
      // UAV side: strictly higher utility than the current partner (or unmatched).
      if (j_current && !(uav_list.scores[r] > *j_current)) continue;

      const auto& sub_list = preferences.subregion(n);
      const auto j_score = sub_list.score_of(j);
      if (!j_score) continue;
      const auto partner = partner_of_sub.find(n);
      if (partner != partner_of_sub.end()) {
        const auto partner_score = sub_list.score_of(partner->second);
        if (partner_score && !(*j_score < *partner_score)) continue;
      }
      blocking.emplace_back(j, n);
    }
  }
  return blocking;
}

}  // namespace uavfl
