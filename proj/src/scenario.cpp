#include "uavfl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uavfl/errors.hpp"

namespace uavfl {

using nlohmann::json;

DeclaredCosts DeclaredCosts::over(const DeclaredCosts& base) const {
  DeclaredCosts out;
  out.alpha = alpha ? alpha : base.alpha;
  out.beta = beta ? beta : base.beta;
  out.psi = psi ? psi : base.psi;
  out.zeta = zeta ? zeta : base.zeta;
  return out;
}

double reward_hat_for(const Scenario& scenario, const SubregionEntry& entry) {
  if (entry.reward_hat) return *entry.reward_hat;
  if (const auto* fixed = std::get_if<FixedRewardHat>(&scenario.reward_hat)) return fixed->value;
  const auto& ref = std::get<ReferenceRewardHat>(scenario.reward_hat);
  return scenario.economy.phi * (ref.psi_ref + ref.zeta_ref);
}

namespace {

// Walks a JSON object, recording problems against a dotted field path instead
// of stopping at the first one.
class Reader {
 public:
  Reader(const json& node, std::string path, std::vector<std::string>& problems)
      : node_(node), path_(std::move(path)), problems_(problems) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  ~Reader() {
    if (!node_.is_object()) return;
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.count(key)) fail(child(key), "unknown field");
    }
  }

  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    return &node_.at(key);
  }

  std::optional<double> number(const std::string& key, bool required) {
    const json* v = get(key);
    if (!v) {
      if (required) fail(child(key), "missing required field");
      return std::nullopt;
    }
    if (!v->is_number()) {
      fail(child(key), "expected a number");
      return std::nullopt;
    }
    const double d = v->get<double>();
    if (!std::isfinite(d)) {
      fail(child(key), "must be finite");
      return std::nullopt;
    }
    return d;
  }

  double number_or(const std::string& key, double fallback) {
    return number(key, false).value_or(fallback);
  }

  std::optional<std::string> string(const std::string& key, bool required) {
    const json* v = get(key);
    if (!v) {
      if (required) fail(child(key), "missing required field");
      return std::nullopt;
    }
    if (v->is_string()) return v->get<std::string>();
    // Integer ids are accepted and normalised to text.
    if (v->is_number_integer()) return v->dump();
    fail(child(key), "expected a string");
    return std::nullopt;
  }

  std::optional<long long> integer(const std::string& key, bool required) {
    const json* v = get(key);
    if (!v) {
      if (required) fail(child(key), "missing required field");
      return std::nullopt;
    }
    if (!v->is_number_integer()) {
      fail(child(key), "expected an integer");
      return std::nullopt;
    }
    return v->get<long long>();
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }
  void fail(const std::string& where, const std::string& what) {
    problems_.push_back(where + ": " + what);
  }
  std::vector<std::string>& problems() { return problems_; }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

std::optional<Position> read_position(const json* v, const std::string& path,
                                      std::vector<std::string>& problems) {
  if (!v) {
    problems.push_back(path + ": missing required field");
    return std::nullopt;
  }
  if (!v->is_array() || v->size() < 2 || v->size() > 3) {
    problems.push_back(path + ": expected [x, y] or [x, y, z]");
    return std::nullopt;
  }
  for (const auto& c : *v) {
    if (!c.is_number()) {
      problems.push_back(path + ": coordinates must be numbers");
      return std::nullopt;
    }
  }
  Position p;
  p.x = (*v)[0].get<double>();
  p.y = (*v)[1].get<double>();
  if (v->size() == 3) p.z = (*v)[2].get<double>();
  return p;
}

DeclaredCosts read_costs(Reader& r) {
  DeclaredCosts c;
  c.alpha = r.number("alpha", false);
  c.beta = r.number("beta", false);
  c.psi = r.number("psi", false);
  c.zeta = r.number("zeta", false);
  return c;
}

EconomyParams read_economy(const json* v, std::size_t n_subregions,
                           std::vector<std::string>& problems) {
  EconomyParams e;
  e.n_subregions = static_cast<int>(n_subregions);
  if (!v) {
    problems.push_back("economy: missing required field");
    return e;
  }
  Reader r(*v, "economy", problems);
  e.phi = r.number("phi", true).value_or(e.phi);
  e.mu = r.number("mu", true).value_or(e.mu);
  e.sigma = r.number("sigma", true).value_or(e.sigma);
  if (const auto n = r.integer("n_subregions", false)) e.n_subregions = static_cast<int>(*n);
  if (const auto base = r.string("log_base", false)) {
    if (*base == "e") {
      e.log_base = LogBase::natural;
    } else if (*base == "2") {
      e.log_base = LogBase::binary;
    } else {
      r.fail(r.child("log_base"), "expected \"e\" or \"2\"");
    }
  }
  return e;
}

FlHyperParams read_fl(const json* v, std::vector<std::string>& problems) {
  FlHyperParams fl;
  if (!v) return fl;
  Reader r(*v, "fl", problems);
  fl.lipschitz = r.number_or("lipschitz", fl.lipschitz);
  fl.strong_convexity = r.number_or("strong_convexity", fl.strong_convexity);
  fl.xi = r.number_or("xi", fl.xi);
  fl.delta = r.number_or("delta", fl.delta);
  fl.local_accuracy = r.number_or("local_accuracy", fl.local_accuracy);
  fl.update_size = r.number_or("update_size", fl.update_size);
  if (const auto k = r.integer("rounds_override", false)) fl.rounds_override = static_cast<int>(*k);
  return fl;
}

RewardHatPolicy read_reward_hat(const json* v, std::vector<std::string>& problems) {
  if (!v) return FixedRewardHat{};
  Reader r(*v, "reward_hat", problems);
  const bool fixed = r.has("value");
  const bool reference = r.has("psi_ref") || r.has("zeta_ref");
  if (fixed && reference) {
    r.fail("reward_hat", "give either value or psi_ref/zeta_ref, not both");
  }
  if (fixed) return FixedRewardHat{r.number("value", true).value_or(0.0)};
  ReferenceRewardHat ref;
  ref.psi_ref = r.number_or("psi_ref", 0.0);
  ref.zeta_ref = r.number_or("zeta_ref", 0.0);
  return ref;
}

CalibrationPolicy read_calibration(const json* v, std::vector<std::string>& problems) {
  CalibrationPolicy p;
  if (!v) return p;
  Reader r(*v, "calibration", problems);
  if (const auto mode = r.string("mode", false)) {
    if (*mode == "relative") {
      p.mode = CalibrationPolicy::Mode::relative;
    } else if (*mode == "absolute") {
      p.mode = CalibrationPolicy::Mode::absolute;
    } else {
      r.fail(r.child("mode"), "expected \"relative\" or \"absolute\"");
    }
  }
  p.delta = r.number_or("delta", p.delta);
  if (const auto rounds = r.integer("max_rounds", false)) p.max_rounds = static_cast<int>(*rounds);
  return p;
}

SubregionEntry read_subregion(const json& v, const std::string& path,
                              std::vector<std::string>& problems) {
  SubregionEntry e;
  Reader r(v, path, problems);
  e.sub.id = r.string("id", true).value_or("");
  if (auto c = read_position(r.get("center"), r.child("center"), problems)) e.sub.center = *c;
  e.sub.full_distance = r.number("full_distance", true).value_or(0.0);
  e.sub.data_volume = r.number("data_volume", true).value_or(0.0);
  e.sub.rate_factor = r.number_or("rate_factor", e.sub.rate_factor);
  e.sub.deadline = r.number_or("deadline", e.sub.deadline);
  if (const json* nodes = r.get("nodes")) {
    if (!nodes->is_array()) {
      r.fail(r.child("nodes"), "expected an array of positions");
    } else {
      for (std::size_t i = 0; i < nodes->size(); ++i) {
        const std::string where = r.child("nodes") + "[" + std::to_string(i) + "]";
        if (auto p = read_position(&(*nodes)[i], where, problems)) e.sub.nodes.push_back(*p);
      }
    }
  }
  e.reward_hat = r.number("reward_hat", false);
  if (const json* posted = r.get("posted_reward_tilde")) {
    if (!posted->is_array()) {
      r.fail(r.child("posted_reward_tilde"), "expected an array of numbers");
    } else {
      for (const auto& x : *posted) {
        if (!x.is_number()) {
          r.fail(r.child("posted_reward_tilde"), "expected an array of numbers");
          break;
        }
        e.posted_reward_tilde.push_back(x.get<double>());
      }
    }
  }
  return e;
}

constexpr const char* kPhysicalFields[] = {"base",           "velocity",       "propulsion",
                                           "cycles_per_bit", "cpu_freq",       "capacitance",
                                           "transmit_power", "energy_capacity"};

UavEntry read_uav(const json& v, const std::string& path, std::vector<std::string>& problems) {
  UavEntry e;
  Reader r(v, path, problems);
  e.id = r.string("id", true).value_or("");

  bool physical = false;
  for (const char* f : kPhysicalFields) physical = physical || r.has(f);
  if (physical) {
    UavProfile p;
    p.id = e.id;
    if (auto b = read_position(r.get("base"), r.child("base"), problems)) p.base = *b;
    p.velocity = r.number("velocity", true).value_or(0.0);
    if (const json* prop = r.get("propulsion")) {
      Reader pr(*prop, r.child("propulsion"), problems);
      if (pr.has("power")) {
        p.propulsion = DirectPower{pr.number("power", true).value_or(0.0)};
        if (pr.has("c1") || pr.has("c2")) {
          pr.fail(pr.path(), "give either power or c1/c2, not both");
        }
      } else {
        DragCoefficients drag;
        drag.c1 = pr.number("c1", true).value_or(0.0);
        drag.c2 = pr.number("c2", true).value_or(0.0);
        p.propulsion = drag;
      }
    } else {
      r.fail(r.child("propulsion"), "missing required field");
    }
    p.cycles_per_bit = r.number("cycles_per_bit", true).value_or(0.0);
    p.cpu_freq = r.number("cpu_freq", true).value_or(0.0);
    p.capacitance = r.number("capacitance", true).value_or(0.0);
    p.transmit_power = r.number("transmit_power", true).value_or(0.0);
    p.energy_capacity = r.number("energy_capacity", true).value_or(0.0);
    e.profile = p;
  }

  if (const json* types = r.get("types")) {
    Reader tr(*types, r.child("types"), problems);
    e.declared = read_costs(tr);
    if (const json* per = tr.get("per_subregion")) {
      if (!per->is_object()) {
        tr.fail(tr.child("per_subregion"), "expected an object keyed by subregion id");
      } else {
        for (const auto& [sid, costs] : per->items()) {
          Reader cr(costs, tr.child("per_subregion") + "." + sid, problems);
          e.declared_per_subregion[sid] = read_costs(cr);
        }
      }
    }
  }
  return e;
}

void check_costs(const DeclaredCosts& c, const std::string& path, std::vector<std::string>& out) {
  auto nonneg = [&](const std::optional<double>& v, const char* name) {
    if (v && !(*v >= 0.0)) out.push_back(path + "." + name + ": must be >= 0");
  };
  nonneg(c.alpha, "alpha");
  nonneg(c.beta, "beta");
  nonneg(c.psi, "psi");
  nonneg(c.zeta, "zeta");
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json position_json(const Position& p) { return json::array({p.x, p.y, p.z}); }

json costs_json(const DeclaredCosts& c) {
  json out = json::object();
  if (c.alpha) out["alpha"] = *c.alpha;
  if (c.beta) out["beta"] = *c.beta;
  if (c.psi) out["psi"] = *c.psi;
  if (c.zeta) out["zeta"] = *c.zeta;
  return out;
}

}  // namespace

void validate(const Scenario& s) {
  std::vector<std::string> problems;
  auto guard = [&](const std::string& path, auto&& check) {
    try {
      check();
    } catch (const std::exception& e) {
      problems.push_back(path + ": " + e.what());
    }
  };

  if (s.subregions.empty()) problems.push_back("subregions: at least one subregion is required");
  if (s.uavs.empty()) problems.push_back("uavs: at least one UAV is required");

  guard("economy", [&] { validate(s.economy); });
  guard("fl", [&] { validate(s.fl); });
  guard("calibration", [&] { validate(s.calibration); });
  if (!(s.theta_hat > 0.0 && s.theta_hat <= 1.0)) problems.push_back("theta_hat: must lie in (0, 1]");
  if (const auto* fixed = std::get_if<FixedRewardHat>(&s.reward_hat)) {
    if (!(fixed->value >= 0.0)) problems.push_back("reward_hat.value: must be >= 0");
  } else {
    const auto& ref = std::get<ReferenceRewardHat>(s.reward_hat);
    if (!(ref.psi_ref >= 0.0)) problems.push_back("reward_hat.psi_ref: must be >= 0");
    if (!(ref.zeta_ref >= 0.0)) problems.push_back("reward_hat.zeta_ref: must be >= 0");
  }

  std::set<std::string> sub_ids;
  for (std::size_t i = 0; i < s.subregions.size(); ++i) {
    const auto& e = s.subregions[i];
    const std::string path = "subregions[" + std::to_string(i) + "]";
    if (e.sub.id.empty()) problems.push_back(path + ".id: must not be empty");
    if (!sub_ids.insert(e.sub.id).second) problems.push_back(path + ".id: duplicate '" + e.sub.id + "'");
    guard(path, [&] { validate(e.sub); });
    if (e.reward_hat && !(*e.reward_hat >= 0.0)) problems.push_back(path + ".reward_hat: must be >= 0");
    for (double r : e.posted_reward_tilde) {
      if (!(r >= 0.0)) {
        problems.push_back(path + ".posted_reward_tilde: entries must be >= 0");
        break;
      }
    }
  }

  std::set<std::string> uav_ids;
  for (std::size_t i = 0; i < s.uavs.size(); ++i) {
    const auto& u = s.uavs[i];
    const std::string path = "uavs[" + std::to_string(i) + "]";
    if (u.id.empty()) problems.push_back(path + ".id: must not be empty");
    if (!uav_ids.insert(u.id).second) problems.push_back(path + ".id: duplicate '" + u.id + "'");
    if (u.profile) {
      guard(path, [&] { validate(*u.profile); });
      guard(path + ".propulsion", [&] { (void)propulsion_power(*u.profile); });
    }
    check_costs(u.declared, path + ".types", problems);
    for (const auto& [sid, costs] : u.declared_per_subregion) {
      const std::string cpath = path + ".types.per_subregion." + sid;
      if (!sub_ids.count(sid)) problems.push_back(cpath + ": unknown subregion id");
      check_costs(costs, cpath, problems);
    }
    if (!u.profile) {
      for (const auto& e : s.subregions) {
        const auto it = u.declared_per_subregion.find(e.sub.id);
        const DeclaredCosts merged =
            it == u.declared_per_subregion.end() ? u.declared : it->second.over(u.declared);
        if (!merged.complete()) {
          problems.push_back(path + ".types: without a physical profile alpha, beta, psi and zeta "
                                    "must all be declared (missing for subregion '" +
                             e.sub.id + "')");
        } else if (!(*merged.alpha + *merged.beta > 0.0)) {
          problems.push_back(path + ".types: alpha + beta must be > 0 at subregion '" + e.sub.id + "'");
        }
      }
    }
  }

  if (!problems.empty()) throw ScenarioError(std::move(problems));
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    if (const auto colon = what.find(": "); colon != std::string::npos) what.erase(0, colon + 2);
    throw ScenarioError({"parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + what});
  }

  std::vector<std::string> problems;
  Scenario s;
  {
    Reader root(doc, "", problems);
    if (!doc.is_object()) throw ScenarioError(std::move(problems));

    const auto version = root.integer("format_version", true);
    if (version && *version != kScenarioFormatVersion) {
      root.fail("format_version", "unsupported version " + std::to_string(*version));
    }
    s.name = root.string("name", false).value_or("");

    if (const json* subs = root.get("subregions")) {
      if (!subs->is_array()) {
        root.fail("subregions", "expected an array");
      } else {
        for (std::size_t i = 0; i < subs->size(); ++i) {
          s.subregions.push_back(
              read_subregion((*subs)[i], "subregions[" + std::to_string(i) + "]", problems));
        }
      }
    } else {
      root.fail("subregions", "missing required field");
    }
    if (const json* uavs = root.get("uavs")) {
      if (!uavs->is_array()) {
        root.fail("uavs", "expected an array");
      } else {
        for (std::size_t i = 0; i < uavs->size(); ++i) {
          s.uavs.push_back(read_uav((*uavs)[i], "uavs[" + std::to_string(i) + "]", problems));
        }
      }
    } else {
      root.fail("uavs", "missing required field");
    }

    s.economy = read_economy(root.get("economy"), s.subregions.size(), problems);
    s.fl = read_fl(root.get("fl"), problems);
    s.theta_hat = root.number_or("theta_hat", s.theta_hat);
    s.reward_hat = read_reward_hat(root.get("reward_hat"), problems);
    s.calibration = read_calibration(root.get("calibration"), problems);
    if (const json* seed = root.get("seed")) {
      if (seed->is_number_unsigned()) {
        s.seed = seed->get<std::uint64_t>();
      } else {
        root.fail("seed", "expected a non-negative integer");
      }
    }
  }
  if (!problems.empty()) throw ScenarioError(std::move(problems));
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({path.string() + ": cannot open file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ScenarioError& e) {
    std::vector<std::string> prefixed;
    for (const auto& p : e.problems()) prefixed.push_back(path.string() + ": " + p);
    throw ScenarioError(std::move(prefixed));
  }
}

std::string write_scenario(const Scenario& s) {
  json doc = json::object();
  doc["format_version"] = kScenarioFormatVersion;
  if (!s.name.empty()) doc["name"] = s.name;

  doc["economy"] = {{"phi", s.economy.phi},
                    {"mu", s.economy.mu},
                    {"sigma", s.economy.sigma},
                    {"n_subregions", s.economy.n_subregions},
                    {"log_base", s.economy.log_base == LogBase::binary ? "2" : "e"}};

  json fl = {{"lipschitz", s.fl.lipschitz},
             {"strong_convexity", s.fl.strong_convexity},
             {"xi", s.fl.xi},
             {"delta", s.fl.delta},
             {"local_accuracy", s.fl.local_accuracy},
             {"update_size", s.fl.update_size}};
  if (s.fl.rounds_override) fl["rounds_override"] = *s.fl.rounds_override;
  doc["fl"] = fl;
  doc["theta_hat"] = s.theta_hat;

  if (const auto* fixed = std::get_if<FixedRewardHat>(&s.reward_hat)) {
    doc["reward_hat"] = {{"value", fixed->value}};
  } else {
    const auto& ref = std::get<ReferenceRewardHat>(s.reward_hat);
    doc["reward_hat"] = {{"psi_ref", ref.psi_ref}, {"zeta_ref", ref.zeta_ref}};
  }

  json subs = json::array();
  for (const auto& e : s.subregions) {
    json j = {{"id", e.sub.id},
              {"center", position_json(e.sub.center)},
              {"full_distance", e.sub.full_distance},
              {"data_volume", e.sub.data_volume},
              {"rate_factor", e.sub.rate_factor}};
    if (std::isfinite(e.sub.deadline)) j["deadline"] = e.sub.deadline;
    if (!e.sub.nodes.empty()) {
      json nodes = json::array();
      for (const auto& p : e.sub.nodes) nodes.push_back(position_json(p));
      j["nodes"] = nodes;
    }
    if (e.reward_hat) j["reward_hat"] = *e.reward_hat;
    if (!e.posted_reward_tilde.empty()) j["posted_reward_tilde"] = e.posted_reward_tilde;
    subs.push_back(j);
  }
  doc["subregions"] = subs;

  json uavs = json::array();
  for (const auto& u : s.uavs) {
    json j = {{"id", u.id}};
    if (u.profile) {
      const auto& p = *u.profile;
      j["base"] = position_json(p.base);
      j["velocity"] = p.velocity;
      if (const auto* direct = std::get_if<DirectPower>(&p.propulsion)) {
        j["propulsion"] = {{"power", direct->watts}};
      } else {
        const auto& drag = std::get<DragCoefficients>(p.propulsion);
        j["propulsion"] = {{"c1", drag.c1}, {"c2", drag.c2}};
      }
      j["cycles_per_bit"] = p.cycles_per_bit;
      j["cpu_freq"] = p.cpu_freq;
      j["capacitance"] = p.capacitance;
      j["transmit_power"] = p.transmit_power;
      j["energy_capacity"] = p.energy_capacity;
    }
    if (!u.declared.empty() || !u.declared_per_subregion.empty()) {
      json types = costs_json(u.declared);
      if (!u.declared_per_subregion.empty()) {
        json per = json::object();
        for (const auto& [sid, c] : u.declared_per_subregion) per[sid] = costs_json(c);
        types["per_subregion"] = per;
      }
      j["types"] = types;
    }
    uavs.push_back(j);
  }
  doc["uavs"] = uavs;

  doc["calibration"] = {
      {"mode", s.calibration.mode == CalibrationPolicy::Mode::absolute ? "absolute" : "relative"},
      {"delta", s.calibration.delta},
      {"max_rounds", s.calibration.max_rounds}};
  doc["seed"] = s.seed;
  return doc.dump(2) + "\n";
}

}  // namespace uavfl
