#include "uavfl/verification.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "uavfl/errors.hpp"

namespace uavfl {

void validate(const OracleConfig& config) {
  if (config.theta_grid_points < 3) throw DomainError("oracle: theta_grid_points must be >= 3");
  if (!(config.tolerance > 0.0)) throw DomainError("oracle: tolerance must be > 0");
  if (config.max_enum_size <= 0) throw DomainError("oracle: max_enum_size must be > 0");
}

double coverage_objective(double theta, double upsilon, double data_volume, double reward_hat,
                          const EconomyParams& econ) {
  const double scale = econ.sigma / (econ.n_subregions * econ.mu * data_volume);
  return scale * accuracy_log(econ.mu * theta * data_volume, econ.log_base) - reward_hat -
         upsilon * theta;
}

namespace {

struct GridBest {
  double value = -std::numeric_limits<double>::infinity();
  long index = -1;

  void offer(double v, long i) {
    if (v > value || (v == value && (index < 0 || i < index))) {
      value = v;
      index = i;
    }
  }
};

void require_points(int points) {
  if (points < 3) throw DomainError("grid oracle: need at least 3 grid points");
}

double grid_theta(long k, int points) {
  return static_cast<double>(k) / static_cast<double>(points - 1);
}

}  // namespace

double grid_oracle_coverage(const AuxiliaryType& type, const Subregion& sub,
                            const EconomyParams& econ, int points, double reward_hat) {
  require_points(points);
  GridBest best;
  for (long k = 0; k < points; ++k) {
    const double theta = grid_theta(k, points);
    best.offer(coverage_objective(theta, type.upsilon, sub.data_volume, reward_hat, econ), k);
  }
  return grid_theta(best.index, points);
}

double grid_oracle_coverage_parallel(const AuxiliaryType& type, const Subregion& sub,
                                     const EconomyParams& econ, int points, double reward_hat) {
  require_points(points);
  GridBest best;
#pragma omp parallel
  {
    GridBest local;
#pragma omp for nowait schedule(static)
    for (long k = 0; k < points; ++k) {
      const double theta = grid_theta(k, points);
      local.offer(coverage_objective(theta, type.upsilon, sub.data_volume, reward_hat, econ), k);
    }
#pragma omp critical(uavfl_grid_best)
    {
      if (local.index >= 0) best.offer(local.value, local.index);
    }
  }
  return grid_theta(best.index, points);
}

bool grid_objective_unimodal(const AuxiliaryType& type, const Subregion& sub,
                             const EconomyParams& econ, int points) {
  require_points(points);
  bool falling = false;
  double prev = coverage_objective(0.0, type.upsilon, sub.data_volume, 0.0, econ);
  for (long k = 1; k < points; ++k) {
    const double cur =
        coverage_objective(grid_theta(k, points), type.upsilon, sub.data_volume, 0.0, econ);
    if (cur < prev) falling = true;
    if (falling && cur > prev) return false;
    prev = cur;
  }
  return true;
}

Matrix ic_matrix(const ContractSchedule& schedule, double phi) {
  const std::size_t m = schedule.items.size();
  Matrix out(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      out[i][k] = revised_utility(schedule.items[k], schedule.ladder[i].alpha,
                                  schedule.ladder[i].beta, phi);
    }
  }
  return out;
}

Matrix utility_matrix(const ContractSchedule& schedule, const EconomyParams& econ) {
  const std::size_t m = schedule.items.size();
  Matrix out(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& type = schedule.ladder[i];
    CostVector costs;
    costs.alpha = type.alpha;
    costs.beta = type.beta;
    costs.psi = type.psi;
    costs.zeta = type.zeta;
    for (std::size_t k = 0; k < m; ++k) out[i][k] = uav_utility(schedule.items[k], costs, econ);
  }
  return out;
}

bool diagonal_dominant(const Matrix& m, double tolerance) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double row_max = *std::max_element(m[i].begin(), m[i].end());
    if (m[i][i] < row_max - tolerance) return false;
  }
  return true;
}

std::vector<std::size_t> row_argmax(const std::vector<double>& row, double tolerance) {
  std::vector<std::size_t> out;
  if (row.empty()) return out;
  const double row_max = *std::max_element(row.begin(), row.end());
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] >= row_max - tolerance) out.push_back(k);
  }
  return out;
}

bool tie_free(const PreferenceProfile& preferences) {
  auto strict = [](const PreferenceList& l) {
    for (std::size_t i = 1; i < l.scores.size(); ++i) {
      if (l.scores[i] == l.scores[i - 1]) return false;
    }
    return true;
  };
  return std::all_of(preferences.subregions.begin(), preferences.subregions.end(), strict) &&
         std::all_of(preferences.uavs.begin(), preferences.uavs.end(), strict);
}

namespace {

constexpr int kUnranked = std::numeric_limits<int>::max();

// Index-based view of a profile: rank[a][b] is b's position on a's list, or
// kUnranked when the pair is not mutually acceptable.
struct RankTables {
  std::vector<std::string> subs;
  std::vector<std::string> uavs;
  std::vector<std::vector<int>> sub_rank;  // [n][j]
  std::vector<std::vector<int>> uav_rank;  // [j][n]

  explicit RankTables(const PreferenceProfile& p) {
    std::map<std::string, int> sub_index, uav_index;
    for (const auto& l : p.subregions) {
      sub_index[l.owner] = static_cast<int>(subs.size());
      subs.push_back(l.owner);
    }
    for (const auto& l : p.uavs) {
      uav_index[l.owner] = static_cast<int>(uavs.size());
      uavs.push_back(l.owner);
    }
    sub_rank.assign(subs.size(), std::vector<int>(uavs.size(), kUnranked));
    uav_rank.assign(uavs.size(), std::vector<int>(subs.size(), kUnranked));
    for (const auto& l : p.subregions) {
      const int n = sub_index.at(l.owner);
      for (std::size_t r = 0; r < l.ranked.size(); ++r) {
        if (const auto it = uav_index.find(l.ranked[r]); it != uav_index.end()) {
          sub_rank[n][it->second] = static_cast<int>(r);
        }
      }
    }
    for (const auto& l : p.uavs) {
      const int j = uav_index.at(l.owner);
      for (std::size_t r = 0; r < l.ranked.size(); ++r) {
        if (const auto it = sub_index.find(l.ranked[r]); it != sub_index.end()) {
          uav_rank[j][it->second] = static_cast<int>(r);
        }
      }
    }
    for (std::size_t n = 0; n < subs.size(); ++n) {
      for (std::size_t j = 0; j < uavs.size(); ++j) {
        if (sub_rank[n][j] == kUnranked || uav_rank[j][n] == kUnranked) {
          sub_rank[n][j] = kUnranked;
          uav_rank[j][n] = kUnranked;
        }
      }
    }
  }

  bool acceptable(int n, int j) const { return sub_rank[n][j] != kUnranked; }
  // partner -1 means unmatched, which every acceptable option beats.
  bool sub_prefers(int n, int j, int partner) const {
    return acceptable(n, j) && (partner < 0 || sub_rank[n][j] < sub_rank[n][partner]);
  }
  bool uav_prefers(int j, int n, int partner) const {
    return acceptable(n, j) && (partner < 0 || uav_rank[j][n] < uav_rank[j][partner]);
  }
};

struct Enumerator {
  const RankTables& t;
  std::vector<int> sub_partner;  // n -> j or -1
  std::vector<int> uav_partner;  // j -> n or -1, only for decided subregions
  std::vector<std::vector<int>> found;

  explicit Enumerator(const RankTables& tables)
      : t(tables), sub_partner(tables.subs.size(), -1), uav_partner(tables.uavs.size(), -1) {}

  // Pairs whose both ends are already fixed must not block.
  bool consistent(int n) const {
    const int c = sub_partner[n];
    for (std::size_t j = 0; j < t.uavs.size(); ++j) {
      const int m = uav_partner[j];
      if (m < 0 || m == n) continue;
      if (t.sub_prefers(n, static_cast<int>(j), c) && t.uav_prefers(static_cast<int>(j), n, m)) {
        return false;
      }
    }
    if (c >= 0) {
      for (int m = 0; m < n; ++m) {
        if (t.sub_prefers(m, c, sub_partner[m]) && t.uav_prefers(c, m, n)) return false;
      }
    }
    return true;
  }

  bool leaf_stable() const {
    for (std::size_t j = 0; j < t.uavs.size(); ++j) {
      if (uav_partner[j] >= 0) continue;
      for (std::size_t n = 0; n < t.subs.size(); ++n) {
        if (t.sub_prefers(static_cast<int>(n), static_cast<int>(j), sub_partner[n])) return false;
      }
    }
    return true;
  }

  void run(std::size_t n) {
    if (n == t.subs.size()) {
      if (leaf_stable()) found.push_back(sub_partner);
      return;
    }
    const int ni = static_cast<int>(n);
    sub_partner[n] = -1;
    if (consistent(ni)) run(n + 1);
    for (std::size_t j = 0; j < t.uavs.size(); ++j) {
      if (uav_partner[j] >= 0 || !t.acceptable(ni, static_cast<int>(j))) continue;
      sub_partner[n] = static_cast<int>(j);
      uav_partner[j] = ni;
      if (consistent(ni)) run(n + 1);
      uav_partner[j] = -1;
    }
    sub_partner[n] = -1;
  }
};

}  // namespace

std::vector<Assignment> enumerate_stable_matchings(const PreferenceProfile& preferences,
                                                   int max_size) {
  const auto size = std::max(preferences.subregions.size(), preferences.uavs.size());
  if (size > static_cast<std::size_t>(max_size)) {
    throw DomainError("enumerate_stable_matchings: " + std::to_string(size) +
                      " agents exceeds the enumeration cap of " + std::to_string(max_size));
  }
  if (!tie_free(preferences)) {
    throw DomainError("enumerate_stable_matchings: preference lists contain ties");
  }
  const RankTables tables(preferences);
  Enumerator e(tables);
  e.run(0);

  std::vector<Assignment> out;
  out.reserve(e.found.size());
  for (const auto& partners : e.found) {
    Assignment a;
    for (std::size_t n = 0; n < partners.size(); ++n) {
      if (partners[n] >= 0) a[tables.uavs[static_cast<std::size_t>(partners[n])]] = tables.subs[n];
    }
    out.push_back(std::move(a));
  }
  return out;
}

bool is_proposer_optimal(const Assignment& candidate, const std::vector<Assignment>& stable,
                         const PreferenceProfile& preferences) {
  auto rank_for = [&](const PreferenceList& list, const Assignment& a) {
    for (const auto& [uav, sub] : a) {
      if (sub != list.owner) continue;
      const auto it = std::find(list.ranked.begin(), list.ranked.end(), uav);
      return it == list.ranked.end() ? kUnranked : static_cast<int>(it - list.ranked.begin());
    }
    return kUnranked;
  };
  for (const auto& list : preferences.subregions) {
    const int own = rank_for(list, candidate);
    for (const auto& other : stable) {
      if (rank_for(list, other) < own) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

std::mt19937_64 instance_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

CoverageDraw random_coverage_draw(std::uint64_t seed, std::size_t index) {
  auto rng = instance_rng(seed, index);
  CoverageDraw d;
  d.econ.phi = uniform(rng, 0.01, 0.2);
  d.econ.mu = uniform(rng, 0.1, 5.0);
  d.econ.n_subregions = uniform_int(rng, 1, 8);
  d.econ.log_base = LogBase::natural;
  d.sub.id = "draw-" + std::to_string(index);
  d.sub.full_distance = 1000.0;
  d.sub.data_volume = uniform(rng, 1.0, 2000.0);
  d.type.rank = 1;
  d.type.uav_id = "u";
  d.type.alpha = uniform(rng, 50.0, 1500.0);
  d.type.beta = uniform(rng, 5.0, 150.0);
  d.type.upsilon = marginal_cost(d.type.alpha, d.type.beta, d.econ.phi);
  // Choose σ so the interior optimum lands at a prescribed θ.
  const double target = uniform(rng, 0.02, 0.98);
  d.econ.sigma =
      d.econ.n_subregions * d.type.upsilon * (1.0 + d.econ.mu * d.sub.data_volume * target);
  return d;
}

ScheduleDraw random_schedule(std::uint64_t seed, std::size_t index) {
  auto rng = instance_rng(seed, index);
  ScheduleDraw d;
  d.econ.phi = uniform(rng, 0.02, 0.1);
  d.econ.mu = uniform(rng, 0.5, 2.0);
  d.econ.n_subregions = uniform_int(rng, 1, 4);
  d.sub.id = "s";
  d.sub.full_distance = 1000.0;
  d.sub.data_volume = uniform(rng, 5.0, 50.0);

  const int m = uniform_int(rng, 1, 8);
  std::vector<Announcer> announcers;
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    Announcer a;
    a.uav_id = "u" + std::to_string(i + 1);
    a.alpha = uniform(rng, 100.0, 1000.0);
    a.beta = uniform(rng, 10.0, 100.0);
    a.psi = uniform(rng, 0.0, 3000.0);
    a.zeta = uniform(rng, 0.0, 500.0);
    worst = std::max(worst, marginal_cost(a.alpha, a.beta, d.econ.phi));
    announcers.push_back(std::move(a));
  }
  const double worst_theta = uniform(rng, 0.05, 0.9);
  d.econ.sigma =
      d.econ.n_subregions * worst * (1.0 + d.econ.mu * d.sub.data_volume * worst_theta);
  const double reward_hat = uniform(rng, 0.0, 50.0);
  d.schedule = build_schedule(announcers, d.sub, d.econ, reward_hat);
  return d;
}

Market random_market(std::uint64_t seed, std::size_t index, int max_size) {
  auto rng = instance_rng(seed, index);
  const int n_uavs = uniform_int(rng, 1, max_size);
  const int n_subs = uniform_int(rng, 1, max_size);

  Market market;
  market.econ.phi = 0.05;
  market.econ.mu = 1.0;
  market.econ.n_subregions = n_subs;
  market.econ.sigma = uniform(rng, 2000.0, 20000.0);

  struct Base {
    double alpha, beta;
  };
  std::vector<Base> types;
  for (int j = 0; j < n_uavs; ++j) {
    market.uav_ids.push_back("u" + std::to_string(j + 1));
    types.push_back({uniform(rng, 100.0, 1000.0), uniform(rng, 10.0, 100.0)});
  }
  for (int n = 0; n < n_subs; ++n) {
    Subregion sub;
    sub.id = "s" + std::to_string(n + 1);
    sub.full_distance = 1000.0;
    sub.data_volume = uniform(rng, 5.0, 50.0);
    std::vector<Announcer> announcers;
    for (int j = 0; j < n_uavs; ++j) {
      const bool feasible = uniform(rng, 0.0, 1.0) < 0.85;
      const double psi = uniform(rng, 0.0, 4000.0);
      const double zeta = uniform(rng, 0.0, 500.0);
      if (!feasible) continue;
      announcers.push_back({market.uav_ids[static_cast<std::size_t>(j)],
                            types[static_cast<std::size_t>(j)].alpha,
                            types[static_cast<std::size_t>(j)].beta, psi, zeta});
    }
    const double reward_hat = uniform(rng, 0.0, 150.0);
    if (announcers.empty()) {
      ContractSchedule empty;
      empty.subregion_id = sub.id;
      empty.reward_hat = reward_hat;
      empty.audit = audit_schedule(empty, market.econ.phi);
      market.schedules.push_back(std::move(empty));
    } else {
      market.schedules.push_back(build_schedule(announcers, sub, market.econ, reward_hat));
    }
  }
  return market;
}

namespace {

bool coverage_agrees(std::uint64_t seed, std::size_t index, int points, double tolerance,
                     double& error) {
  const CoverageDraw d = random_coverage_draw(seed, index);
  const double closed = optimal_coverage(d.type, d.sub, d.econ);
  const double grid = grid_oracle_coverage(d.type, d.sub, d.econ, points);
  error = std::abs(closed - grid);
  return error <= tolerance;
}

// 0 = pass, 1 = ties (skipped), otherwise a bitmask of failures.
enum StabilityOutcome : unsigned {
  kPass = 0,
  kTies = 1,
  kBlocking = 2,
  kMissing = 4,
  kSuboptimal = 8,
  kError = 16
};

unsigned check_stability_instance_unguarded(std::uint64_t seed, std::size_t index, int max_size) {
  const Market market = random_market(seed, index, max_size);
  const PreferenceProfile prefs = build_preferences(market.schedules, market.uav_ids, market.econ);
  if (!tie_free(prefs)) return kTies;

  const MatchState state = gs_match(market);
  unsigned out = kPass;
  if (!stability_audit(state.assignment, prefs).empty()) out |= kBlocking;
  const auto stable = enumerate_stable_matchings(prefs, max_size);
  if (std::find(stable.begin(), stable.end(), state.assignment) == stable.end()) out |= kMissing;
  if (!is_proposer_optimal(state.assignment, stable, prefs)) out |= kSuboptimal;
  return out;
}

// Exceptions must not escape an OpenMP worksharing region.
unsigned check_stability_instance(std::uint64_t seed, std::size_t index, int max_size) {
  try {
    return check_stability_instance_unguarded(seed, index, max_size);
  } catch (const std::exception&) {
    return kError;
  }
}

void tally(StabilitySummary& s, unsigned outcome) {
  ++s.instances;
  if (outcome == kTies) {
    ++s.skipped_with_ties;
    return;
  }
  if (outcome & kBlocking) ++s.blocking;
  if (outcome & kMissing) ++s.not_enumerated;
  if (outcome & kSuboptimal) ++s.not_optimal;
  if (outcome & kError) ++s.errors;
}

}  // namespace

AgreementSummary coverage_agreement_sweep(std::uint64_t seed, std::size_t draws, int points,
                                          double tolerance) {
  AgreementSummary s;
  s.draws = draws;
  for (std::size_t i = 0; i < draws; ++i) {
    double error = 0.0;
    if (!coverage_agrees(seed, i, points, tolerance, error)) ++s.failures;
    s.max_abs_error = std::max(s.max_abs_error, error);
  }
  return s;
}

AgreementSummary coverage_agreement_sweep_parallel(std::uint64_t seed, std::size_t draws,
                                                   int points, double tolerance) {
  AgreementSummary s;
  s.draws = draws;
  std::size_t failures = 0;
  double max_error = 0.0;
  const auto n = static_cast<long>(draws);
#pragma omp parallel for schedule(static) reduction(+ : failures) reduction(max : max_error)
  for (long i = 0; i < n; ++i) {
    double error = 0.0;
    if (!coverage_agrees(seed, static_cast<std::size_t>(i), points, tolerance, error)) ++failures;
    max_error = std::max(max_error, error);
  }
  s.failures = failures;
  s.max_abs_error = max_error;
  return s;
}

StabilitySummary stability_sweep(std::uint64_t seed, std::size_t instances, int max_size) {
  StabilitySummary s;
  for (std::size_t i = 0; i < instances; ++i) tally(s, check_stability_instance(seed, i, max_size));
  return s;
}

StabilitySummary stability_sweep_parallel(std::uint64_t seed, std::size_t instances,
                                          int max_size) {
  std::vector<unsigned> outcomes(instances);
  const auto n = static_cast<long>(instances);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    outcomes[static_cast<std::size_t>(i)] =
        check_stability_instance(seed, static_cast<std::size_t>(i), max_size);
  }
  StabilitySummary s;
  for (unsigned o : outcomes) tally(s, o);
  return s;
}

}  // namespace uavfl
