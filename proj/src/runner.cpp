#include "uavfl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <sstream>

#include "json.hpp"
#include "uavfl/errors.hpp"

namespace uavfl {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12) << v;
  return os.str();
}

std::string joined(const std::vector<double>& values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ';';
    out += fmt(v);
  }
  return out;
}

std::string joined(const std::vector<std::string>& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ';';
    out += v;
  }
  return out;
}

// Buffers rows and writes the file in one go at the end of a run.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  void save(const std::filesystem::path& dir, const std::string& name) const {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << text_;
  }

 private:
  std::string text_;
};

void ensure_dir(const std::filesystem::path& out) {
  if (!out.empty()) std::filesystem::create_directories(out);
}

void save_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  f << text;
}

ContractSchedule empty_schedule(const std::string& id, double reward_hat, double phi) {
  ContractSchedule s;
  s.subregion_id = id;
  s.reward_hat = reward_hat;
  s.audit = audit_schedule(s, phi);
  return s;
}

DeclaredCosts declared_for(const UavEntry& u, const std::string& sid) {
  const auto it = u.declared_per_subregion.find(sid);
  return it == u.declared_per_subregion.end() ? u.declared : it->second.over(u.declared);
}

double matrix_violation(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double best = *std::max_element(m[i].begin(), m[i].end());
    worst = std::max(worst, best - m[i][i]);
  }
  return worst;
}

}  // namespace

PreparedMarket prepare(const Scenario& scenario) {
  validate(scenario);
  PreparedMarket p;
  p.market.econ = scenario.economy;
  for (const auto& u : scenario.uavs) p.market.uav_ids.push_back(u.id);

  for (const auto& entry : scenario.subregions) {
    const Subregion& sub = entry.sub;
    p.subregions.push_back(sub);

    std::vector<Announcer> announcers;
    for (const auto& u : scenario.uavs) {
      const UavSubregion key{u.id, sub.id};
      CostVector cv;
      bool feasible = true;
      if (u.profile) {
        cv = derive_cost_vector(sub, *u.profile, scenario.fl);
        const FeasibilityReport report =
            check_feasibility(sub, *u.profile, scenario.fl, scenario.theta_hat);
        p.physical_feasibility[key] = report;
        feasible = report.feasible();
      }
      const DeclaredCosts d = declared_for(u, sub.id);
      if (d.alpha) cv.alpha = *d.alpha;
      if (d.beta) cv.beta = *d.beta;
      if (d.psi) cv.psi = *d.psi;
      if (d.zeta) cv.zeta = *d.zeta;
      p.costs[key] = cv;
      p.feasible[key] = feasible;
      if (feasible) announcers.push_back({u.id, cv.alpha, cv.beta, cv.psi, cv.zeta});
    }

    const double reward_hat = reward_hat_for(scenario, entry);
    ContractSchedule schedule =
        announcers.empty() ? empty_schedule(sub.id, reward_hat, scenario.economy.phi)
                           : build_schedule(announcers, sub, scenario.economy, reward_hat);

    if (!entry.posted_reward_tilde.empty()) {
      if (entry.posted_reward_tilde.size() != schedule.size()) {
        throw ScenarioError({"subregions." + sub.id + ".posted_reward_tilde: " +
                             std::to_string(entry.posted_reward_tilde.size()) +
                             " values for a ladder of " + std::to_string(schedule.size())});
      }
      for (std::size_t i = 0; i < schedule.size(); ++i) {
        schedule.items[i].reward_tilde = entry.posted_reward_tilde[i];
      }
      schedule.audit = audit_schedule(schedule, scenario.economy.phi);
    }
    p.market.schedules.push_back(std::move(schedule));
  }
  return p;
}

ContractReport run_contract(const Scenario& scenario, const std::filesystem::path& out) {
  const PreparedMarket p = prepare(scenario);
  const EconomyParams& econ = p.market.econ;

  ContractReport report;
  report.schedules = p.market.schedules;

  Csv coverage({"subregion", "rank", "uav", "upsilon", "theta"});
  Csv rewards({"subregion", "rank", "uav", "reward_tilde", "reward_hat", "reward"});
  Csv ic({"subregion", "i", "k", "utility"});
  Csv profit({"subregion", "winner_rank", "uav", "profit"});

  for (std::size_t n = 0; n < report.schedules.size(); ++n) {
    const auto& s = report.schedules[n];
    const auto& sub = p.subregions[n];
    const Matrix m = ic_matrix(s, econ.phi);
    report.ic_matrices[s.subregion_id] = m;
    auto& profits = report.profit_by_rank[s.subregion_id];

    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& t = s.ladder[i];
      const auto& item = s.items[i];
      const std::string rank = std::to_string(t.rank);
      coverage.row({s.subregion_id, rank, t.uav_id, fmt(t.upsilon), fmt(item.theta)});
      rewards.row({s.subregion_id, rank, t.uav_id, fmt(item.reward_tilde), fmt(item.reward_hat),
                   fmt(item.reward())});
      for (std::size_t k = 0; k < s.size(); ++k) {
        ic.row({s.subregion_id, rank, std::to_string(s.ladder[k].rank), fmt(m[i][k])});
      }
      const double g = subregion_profit(item.theta, sub.data_volume, item.reward(), econ);
      profits.push_back(g);
      profit.row({s.subregion_id, rank, t.uav_id, fmt(g)});
    }
  }

  if (!out.empty()) {
    ensure_dir(out);
    coverage.save(out, "coverage.csv");
    rewards.save(out, "rewards.csv");
    ic.save(out, "ic_matrix.csv");
    profit.save(out, "profit.csv");
  }
  return report;
}

MatchReport run_match(const Scenario& scenario, const std::filesystem::path& out) {
  const PreparedMarket p = prepare(scenario);
  const EconomyParams& econ = p.market.econ;

  MatchReport report;
  report.state = gs_match(p.market, scenario.calibration);
  const auto& schedules = report.state.schedules;
  report.preferences = build_preferences(schedules, p.market.uav_ids, econ);
  report.blocking = stability_audit(report.state.assignment, report.preferences);

  std::set<std::string> calibrated;
  for (const auto& e : report.state.calibration_log) calibrated.insert(e.subregion_id);

  std::vector<CoverageEntry> coverages;
  std::vector<double> paid;
  for (std::size_t n = 0; n < schedules.size(); ++n) {
    const auto& s = schedules[n];
    CoverageEntry c{0.0, p.subregions[n].data_volume};
    double r = 0.0;
    if (const auto j = report.state.uav_of(s.subregion_id)) {
      const auto& item = s.items[s.position_of(*j)];
      c.theta = item.theta;
      r = item.reward();
    }
    coverages.push_back(c);
    paid.push_back(r);
  }
  report.owner_profit = owner_profit(coverages, paid, econ);

  Csv assignment({"uav", "subregion", "theta", "reward_tilde", "reward_hat", "reward", "utility",
                  "reward_vector"});
  for (const auto& j : p.market.uav_ids) {
    const auto sid = report.state.subregion_of(j);
    if (!sid) {
      assignment.row({j, "UNMATCHED", "0", "0", "0", "0", "0", "none"});
      continue;
    }
    const auto it = std::find_if(schedules.begin(), schedules.end(),
                                 [&](const ContractSchedule& s) { return s.subregion_id == *sid; });
    const auto& item = it->items[it->position_of(j)];
    const double u = *hypothetical_utility(*it, j, econ);
    report.uav_utility[j] = u;
    assignment.row({j, *sid, fmt(item.theta), fmt(item.reward_tilde), fmt(item.reward_hat),
                    fmt(item.reward()), fmt(u), calibrated.count(*sid) ? "calibrated" : "initial"});
  }

  Csv calibration({"subregion", "tied", "survivor", "steps", "reward_tilde_before",
                   "reward_tilde_after"});
  for (const auto& e : report.state.calibration_log) {
    calibration.row({e.subregion_id, joined(e.tied), e.survivor, std::to_string(e.steps),
                     joined(e.before), joined(e.after)});
  }

  Csv stability({"status", "uav", "subregion"});
  if (report.blocking.empty()) {
    stability.row({"stable", "", ""});
  } else {
    for (const auto& [j, n] : report.blocking) stability.row({"blocking", j, n});
  }

  if (!out.empty()) {
    ensure_dir(out);
    assignment.save(out, "assignment.csv");
    calibration.save(out, "calibration.csv");
    stability.save(out, "stability.csv");

    nlohmann::json doc;
    doc["scenario"] = scenario.name;
    doc["rounds"] = report.state.rounds;
    doc["owner_profit"] = report.owner_profit;
    doc["stable"] = report.blocking.empty();
    doc["assignment"] = report.state.assignment;
    doc["unmatched_subregions"] = report.state.unmatched_subregions;
    doc["uav_utility"] = report.uav_utility;
    nlohmann::json audits = nlohmann::json::object();
    for (const auto& s : schedules) {
      audits[s.subregion_id] = {{"ir_ok", s.audit.ir_ok},
                                {"ic_ok", s.audit.ic_ok},
                                {"monotone_ok", s.audit.monotone_ok},
                                {"worst_ic_violation", s.audit.worst_ic_violation}};
    }
    doc["audits"] = audits;
    doc["calibrations"] = report.state.calibration_log.size();
    save_text(out, "report.json", doc.dump(2) + "\n");
  }
  return report;
}

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

namespace {

bool lemma_ordering_holds(const ContractSchedule& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      const bool theta_less = s.items[i].theta < s.items[k].theta;
      const bool reward_less = s.items[i].reward_tilde < s.items[k].reward_tilde;
      if (theta_less != reward_less) return false;
    }
  }
  return true;
}

}  // namespace

VerifyReport run_verify(const Scenario& scenario, const VerifyOptions& options,
                        const std::filesystem::path& out) {
  validate(options.oracle);
  const PreparedMarket p = prepare(scenario);
  const EconomyParams& econ = p.market.econ;
  const int points = options.oracle.theta_grid_points;
  const double tol = options.oracle.tolerance;
  const double grid_tol = 2.0 / (points - 1);

  VerifyReport report;
  report.seed = options.seed;
  auto add = [&](std::string name, bool pass, double magnitude, std::string detail = {}) {
    report.checks.push_back({std::move(name), pass, magnitude, std::move(detail)});
  };

  for (std::size_t n = 0; n < p.market.schedules.size(); ++n) {
    const auto& s = p.market.schedules[n];
    const auto& sub = p.subregions[n];
    const std::string tag = s.subregion_id;
    if (s.size() == 0) {
      add("audit:" + tag, true, 0.0, "no announcers");
      continue;
    }
    const AuditReport a = audit_schedule(s, econ.phi, tol);
    add("audit:" + tag, a.ok(), std::max(0.0, a.worst_ic_violation),
        std::string("ir=") + (a.ir_ok ? "ok" : "fail") + " ic=" + (a.ic_ok ? "ok" : "fail") +
            " monotone=" + (a.monotone_ok ? "ok" : "fail"));

    const Matrix m = utility_matrix(s, econ);
    const bool dominant = diagonal_dominant(m, tol);
    add("ic_matrix:" + tag, dominant, matrix_violation(m));
    add("ic_agreement:" + tag, dominant == a.ic_ok, 0.0);

    double worst = 0.0;
    bool parallel_same = true;
    for (const auto& t : s.ladder) {
      const double closed = optimal_coverage(t, sub, econ);
      const double grid = grid_oracle_coverage(t, sub, econ, points);
      parallel_same =
          parallel_same && grid == grid_oracle_coverage_parallel(t, sub, econ, points);
      worst = std::max(worst, std::abs(closed - grid));
    }
    add("coverage_oracle:" + tag, worst <= grid_tol && parallel_same, worst,
        parallel_same ? "" : "serial and parallel grid scans differ");
  }

  const MatchState state = gs_match(p.market, scenario.calibration);
  const PreferenceProfile prefs = build_preferences(state.schedules, p.market.uav_ids, econ);
  const auto blocking = stability_audit(state.assignment, prefs);
  add("match:stability", blocking.empty(), static_cast<double>(blocking.size()));

  const int cap = options.oracle.max_enum_size;
  if (!tie_free(prefs)) {
    add("match:enumeration", true, 0.0, "skipped: preference lists contain ties");
  } else if (static_cast<int>(prefs.uavs.size()) > cap ||
             static_cast<int>(prefs.subregions.size()) > cap) {
    add("match:enumeration", true, 0.0, "skipped: instance above enumeration cap");
  } else {
    const auto stable = enumerate_stable_matchings(prefs, cap);
    const bool member = std::find(stable.begin(), stable.end(), state.assignment) != stable.end();
    const bool optimal = is_proposer_optimal(state.assignment, stable, prefs);
    add("match:enumeration", member && optimal, static_cast<double>(stable.size()),
        std::to_string(stable.size()) + " stable matchings");
  }

  const auto cov = coverage_agreement_sweep(options.seed, options.coverage_draws, points, grid_tol);
  const auto cov_par =
      coverage_agreement_sweep_parallel(options.seed, options.coverage_draws, points, grid_tol);
  add("random:coverage_oracle", cov.failures == 0 && cov == cov_par, cov.max_abs_error,
      std::to_string(cov.draws) + " draws, " + std::to_string(cov.failures) + " failures");

  const auto stab = stability_sweep(options.seed, options.stability_instances, cap);
  const auto stab_par = stability_sweep_parallel(options.seed, options.stability_instances, cap);
  add("random:stability", stab.failures() == 0 && stab == stab_par,
      static_cast<double>(stab.failures()),
      std::to_string(stab.instances) + " instances, " + std::to_string(stab.skipped_with_ties) +
          " skipped with ties");

  std::size_t bad = 0;
  for (std::size_t i = 0; i < options.schedule_draws; ++i) {
    const ScheduleDraw d = random_schedule(options.seed, i);
    const bool dominant = diagonal_dominant(ic_matrix(d.schedule, d.econ.phi), tol);
    if (!d.schedule.audit.ok() || !lemma_ordering_holds(d.schedule) ||
        dominant != d.schedule.audit.ic_ok) {
      ++bad;
    }
  }
  add("random:schedules", bad == 0, static_cast<double>(bad),
      std::to_string(options.schedule_draws) + " schedules");

  if (!out.empty()) {
    ensure_dir(out);
    Csv csv({"check", "result", "magnitude", "detail", "seed"});
    for (const auto& c : report.checks) {
      csv.row({c.name, c.pass ? "PASS" : "FAIL", fmt(c.magnitude), c.detail,
               std::to_string(report.seed)});
    }
    csv.save(out, "verify.csv");
  }
  return report;
}

namespace {

[[noreturn]] void unknown_parameter(const std::string& name, const std::string& why) {
  throw ScenarioError({"sweep parameter '" + name + "': " + why});
}

void set_position(Position& p, const std::string& field, double v, const std::string& name) {
  const char axis = field.back();
  if (axis == 'x') {
    p.x = v;
  } else if (axis == 'y') {
    p.y = v;
  } else if (axis == 'z') {
    p.z = v;
  } else {
    unknown_parameter(name, "unknown field");
  }
}

void set_subregion_field(SubregionEntry& e, const std::string& field, double v,
                         const std::string& name) {
  if (field == "full_distance") {
    e.sub.full_distance = v;
  } else if (field == "data_volume") {
    e.sub.data_volume = v;
  } else if (field == "rate_factor") {
    e.sub.rate_factor = v;
  } else if (field == "deadline") {
    e.sub.deadline = v;
  } else if (field == "reward_hat") {
    e.reward_hat = v;
  } else if (field == "center_x" || field == "center_y" || field == "center_z") {
    set_position(e.sub.center, field, v, name);
  } else {
    unknown_parameter(name, "unknown subregion field");
  }
}

void set_uav_field(UavEntry& u, const std::string& field, double v, const std::string& name) {
  if (field == "alpha") {
    u.declared.alpha = v;
    return;
  }
  if (field == "beta") {
    u.declared.beta = v;
    return;
  }
  if (field == "psi") {
    u.declared.psi = v;
    return;
  }
  if (field == "zeta") {
    u.declared.zeta = v;
    return;
  }
  if (!u.profile) unknown_parameter(name, "UAV has no physical profile");
  UavProfile& p = *u.profile;
  if (field == "velocity") {
    p.velocity = v;
  } else if (field == "power") {
    p.propulsion = DirectPower{v};
  } else if (field == "c1" || field == "c2") {
    auto* drag = std::get_if<DragCoefficients>(&p.propulsion);
    if (!drag) unknown_parameter(name, "UAV uses direct power");
    (field == "c1" ? drag->c1 : drag->c2) = v;
  } else if (field == "cycles_per_bit") {
    p.cycles_per_bit = v;
  } else if (field == "cpu_freq") {
    p.cpu_freq = v;
  } else if (field == "capacitance") {
    p.capacitance = v;
  } else if (field == "transmit_power") {
    p.transmit_power = v;
  } else if (field == "energy_capacity") {
    p.energy_capacity = v;
  } else if (field == "base_x" || field == "base_y" || field == "base_z") {
    set_position(p.base, field, v, name);
  } else {
    unknown_parameter(name, "unknown UAV field");
  }
}

// "subregion.<id>.<field>" -> (id, field); the id may itself contain dots.
std::pair<std::string, std::string> split_path(const std::string& rest, const std::string& name) {
  const auto dot = rest.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == rest.size()) {
    unknown_parameter(name, "expected <kind>.<id>.<field>");
  }
  return {rest.substr(0, dot), rest.substr(dot + 1)};
}

struct SweepPoint {
  std::vector<std::pair<std::string, double>> metrics;
};

SweepPoint evaluate(const Scenario& s) {
  SweepPoint point;
  try {
    validate(s);
  } catch (const ScenarioError&) {
    point.metrics.emplace_back("invalid", 1.0);
    return point;
  }
  const PreparedMarket p = prepare(s);
  const auto& econ = p.market.econ;

  std::size_t responders = 0;
  for (const auto& j : p.market.uav_ids) {
    if (!build_uav_preferences(j, p.market.schedules, econ).ranked.empty()) ++responders;
  }
  point.metrics.emplace_back("responders", static_cast<double>(responders));
  for (const auto& j : p.market.uav_ids) {
    for (const auto& sched : p.market.schedules) {
      if (const auto u = hypothetical_utility(sched, j, econ)) {
        point.metrics.emplace_back("utility:" + j + "@" + sched.subregion_id, *u);
      }
    }
  }
  try {
    const MatchReport m = run_match(s);
    point.metrics.emplace_back("matched_count", static_cast<double>(m.state.assignment.size()));
    point.metrics.emplace_back("owner_profit", m.owner_profit);
  } catch (const UnresolvedTie&) {
    point.metrics.emplace_back("unresolved_tie", 1.0);
  }
  return point;
}

}  // namespace

Scenario with_parameter(const Scenario& scenario, const std::string& name, double value) {
  Scenario s = scenario;
  if (name == "reward_hat") {
    s.reward_hat = FixedRewardHat{value};
    for (auto& e : s.subregions) e.reward_hat.reset();
  } else if (name == "sigma") {
    s.economy.sigma = value;
  } else if (name == "mu") {
    s.economy.mu = value;
  } else if (name == "phi") {
    s.economy.phi = value;
  } else if (name == "theta_hat") {
    s.theta_hat = value;
  } else if (name.rfind("subregion.", 0) == 0) {
    const auto [id, field] = split_path(name.substr(10), name);
    auto it = std::find_if(s.subregions.begin(), s.subregions.end(),
                           [&](const SubregionEntry& e) { return e.sub.id == id; });
    if (it == s.subregions.end()) unknown_parameter(name, "no subregion '" + id + "'");
    set_subregion_field(*it, field, value, name);
  } else if (name.rfind("uav.", 0) == 0) {
    const auto [id, field] = split_path(name.substr(4), name);
    auto it = std::find_if(s.uavs.begin(), s.uavs.end(),
                           [&](const UavEntry& u) { return u.id == id; });
    if (it == s.uavs.end()) unknown_parameter(name, "no UAV '" + id + "'");
    set_uav_field(*it, field, value, name);
  } else {
    unknown_parameter(name, "unknown parameter");
  }
  return s;
}

std::vector<SweepRow> run_sweep(const Scenario& scenario, const std::string& param, double from,
                                double to, int steps, const std::filesystem::path& out) {
  validate(scenario);
  (void)with_parameter(scenario, param, from);  // reject unknown names even for empty ranges
  if (steps < 0) throw ScenarioError({"sweep: steps must be >= 0"});

  std::vector<double> values(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    values[static_cast<std::size_t>(i)] =
        steps == 1 ? from : from + (to - from) * static_cast<double>(i) / (steps - 1);
  }

  std::vector<SweepPoint> points(values.size());
  std::vector<std::string> errors(values.size());
  const auto n = static_cast<long>(values.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      points[k] = evaluate(with_parameter(scenario, param, values[k]));
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("sweep: " + e);
  }

  std::vector<SweepRow> rows;
  std::optional<double> first_response;
  for (std::size_t k = 0; k < values.size(); ++k) {
    for (const auto& [metric, v] : points[k].metrics) {
      rows.push_back({values[k], metric, v});
      if (metric == "responders" && v > 0.0 && !first_response) first_response = values[k];
    }
  }
  if (first_response) rows.push_back({*first_response, "first_response", *first_response});

  if (!out.empty()) {
    ensure_dir(out);
    Csv csv({"param_value", "metric", "value"});
    for (const auto& r : rows) csv.row({fmt(r.param_value), r.metric, fmt(r.value)});
    csv.save(out, "sweep.csv");
  }
  return rows;
}

}  // namespace uavfl
