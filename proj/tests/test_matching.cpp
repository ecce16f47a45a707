#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "uavfl/errors.hpp"
#include "uavfl/matching.hpp"
#include "uavfl/runner.hpp"
#include "uavfl/scenario.hpp"
#include "uavfl/verification.hpp"

using namespace uavfl;

namespace {

Scenario fixture(const std::string& name) {
  return load_scenario(std::string(UAVFL_SCENARIO_DIR) + "/" + name);
}

const Assignment kSixBySix = {{"1", "6"}, {"2", "1"}, {"3", "3"},
                              {"4", "2"}, {"5", "5"}, {"6", "4"}};

// One subregion, two identical UAVs (same υ, ψ, ζ) and a fixed reward that
// leaves both with positive utility.
Market identical_pair(double reward_hat) {
  Subregion sub;
  sub.id = "s";
  sub.full_distance = 1000.0;
  sub.data_volume = 10.0;
  Market m;
  m.econ.sigma = 100.0;
  m.uav_ids = {"p", "q"};
  const std::vector<Announcer> a = {{"p", 250, 20, 100, 0}, {"q", 250, 20, 100, 0}};
  m.schedules.push_back(build_schedule(a, sub, m.econ, reward_hat));
  return m;
}

}  // namespace

TEST(SubregionPreferences, FiveUavFixtureListsByMarginalCost) {
  const auto p = prepare(fixture("table3.scn"));
  for (const auto& s : p.market.schedules) {
    const auto list = build_subregion_preferences(s);
    // υ pairs {1,2} < {3,4} < {5}; order within a pair follows the fixed costs.
    ASSERT_EQ(list.ranked.size(), 5u);
    EXPECT_TRUE(std::is_sorted(list.scores.begin(), list.scores.end()));
    EXPECT_EQ(std::set<std::string>(list.ranked.begin(), list.ranked.begin() + 2),
              (std::set<std::string>{"1", "2"}));
    EXPECT_EQ(std::set<std::string>(list.ranked.begin() + 2, list.ranked.begin() + 4),
              (std::set<std::string>{"3", "4"}));
    EXPECT_EQ(list.ranked[4], "5");
    EXPECT_EQ(list.scores[0], list.scores[1]);
    EXPECT_EQ(list.scores[2], list.scores[3]);
  }
}

TEST(SubregionPreferences, SingletonAndEmpty) {
  Subregion sub;
  sub.id = "s";
  const std::vector<Announcer> one = {{"a", 1, 1, 0, 0}};
  EXPECT_EQ(build_subregion_preferences(sub, one, 0.05).ranked,
            std::vector<std::string>{"a"});
  EXPECT_TRUE(build_subregion_preferences(sub, std::vector<Announcer>{}, 0.05).ranked.empty());
}

TEST(SubregionPreferences, InfeasibleUavIsAbsent) {
  Scenario s = fixture("table3.scn");
  s.subregions[0].sub.deadline = 100.0;  // far too short for anyone at subregion 1
  s.uavs[1].profile->velocity = 1e4;     // except UAV 2, which now flies fast enough
  const auto p = prepare(s);
  const auto list = build_subregion_preferences(p.market.schedules[0]);
  EXPECT_TRUE(list.contains("2"));
  EXPECT_FALSE(list.contains("1"));
  EXPECT_FALSE(p.feasible.at({"1", "1"}));
}

TEST(UavPreferences, AllNegativeGivesEmptyList) {
  Scenario s = fixture("table3.scn");
  s.reward_hat = FixedRewardHat{0.0};
  s.economy.sigma = 1.0;  // almost no rent anywhere
  const auto p = prepare(s);
  EXPECT_TRUE(build_uav_preferences("5", p.market.schedules, p.market.econ).ranked.empty());
}

TEST(UavPreferences, ScoresDescend) {
  const auto p = prepare(fixture("fig6.scn"));
  for (const auto& j : p.market.uav_ids) {
    const auto list = build_uav_preferences(j, p.market.schedules, p.market.econ);
    EXPECT_TRUE(std::is_sorted(list.scores.rbegin(), list.scores.rend()));
  }
}

TEST(GaleShapley, SixBySixFixture) {
  const auto p = prepare(fixture("fig6.scn"));
  const MatchState state = gs_match(p.market);
  EXPECT_EQ(state.assignment, kSixBySix);
  EXPECT_TRUE(state.unmatched_subregions.empty());
  EXPECT_TRUE(state.calibration_log.empty());
}

TEST(GaleShapley, SeventhUavLeavesTheCostliestOut) {
  const auto r = run_match(fixture("fig8.scn"));
  EXPECT_EQ(r.state.assignment.at("7"), "6");
  EXPECT_EQ(r.state.assignment.at("1"), "1");
  EXPECT_EQ(r.state.assignment.at("2"), "5");
  EXPECT_FALSE(r.state.subregion_of("6"));
}

TEST(GaleShapley, SinglePair) {
  Market m = identical_pair(50.0);
  m.uav_ids = {"p"};
  m.schedules[0] = build_schedule(std::vector<Announcer>{{"p", 250, 20, 100, 0}},
                                  Subregion{"s", {}, 1000.0, 10.0}, m.econ, 50.0);
  EXPECT_EQ(gs_match(m).assignment, (Assignment{{"p", "s"}}));
}

TEST(GaleShapley, OneToOneOnRandomMarkets) {
  for (std::size_t i = 0; i < 100; ++i) {
    const Market m = random_market(5, i);
    const MatchState s = gs_match(m);
    std::set<std::string> subs;
    for (const auto& [j, n] : s.assignment) EXPECT_TRUE(subs.insert(n).second);
    for (const auto& n : s.unmatched_subregions) EXPECT_FALSE(subs.count(n));
    EXPECT_EQ(subs.size() + s.unmatched_subregions.size(), m.schedules.size());
  }
}

TEST(GaleShapley, ProportionalRescalingKeepsAssignment) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> factor(0.3, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Scenario s = fixture("fig6.scn");
    for (auto& e : s.subregions) {
      const double k = factor(rng);
      e.sub.full_distance *= k;
      e.sub.data_volume *= k;
      for (auto& u : s.uavs) {
        auto& d = u.declared_per_subregion[e.sub.id];
        d.alpha = *u.declared.alpha * k;
        d.beta = *u.declared.beta * k;
      }
    }
    EXPECT_EQ(run_match(s).state.assignment, kSixBySix) << "trial " << trial;
  }
}

TEST(Calibration, NearerUavSurvivesInFiveUavFixture) {
  const auto r = run_match(fixture("table3.scn"));
  EXPECT_EQ(r.state.assignment.at("4"), "3");
  EXPECT_EQ(r.state.assignment.at("1"), "2");
  EXPECT_EQ(r.state.assignment.at("2"), "1");
  ASSERT_EQ(r.state.calibration_log.size(), 1u);
  const auto& e = r.state.calibration_log[0];
  EXPECT_EQ(e.subregion_id, "3");
  EXPECT_EQ(e.survivor, "4");
  EXPECT_GT(e.steps, 0);
  for (std::size_t i = 0; i < e.before.size(); ++i) {
    if (e.before[i] > 0.0) EXPECT_LT(e.after[i], e.before[i]);
  }
}

TEST(Calibration, OnlyTheTiedSubregionChanges) {
  const auto p = prepare(fixture("table3.scn"));
  const MatchState state = gs_match(p.market);
  for (std::size_t n = 0; n < p.market.schedules.size(); ++n) {
    const bool touched = p.market.schedules[n].subregion_id == "3";
    const auto& before = p.market.schedules[n].items;
    const auto& after = state.schedules[n].items;
    EXPECT_EQ(before == after, !touched) << p.market.schedules[n].subregion_id;
  }
}

TEST(Calibration, SingleCandidateNoLog) {
  Market m = identical_pair(50.0);
  const std::vector<std::string> one = {"p"};
  const auto out = rewards_calibration(
      m.schedules[0], one, [](const std::string&) { return 0.0; }, m.econ, {});
  EXPECT_EQ(out.survivor, "p");
  EXPECT_FALSE(out.entry);
}

TEST(Calibration, IdenticalCandidatesFallBackToInputOrder) {
  Market m = identical_pair(5.5);  // 0.5 above φ(ψ+ζ); neither UAV earns rent
  // One absolute step would push both below zero, so it is undone.
  CalibrationPolicy absolute{CalibrationPolicy::Mode::absolute, 1000.0, 10};
  const auto s = gs_match(m, absolute);
  EXPECT_EQ(s.assignment, (Assignment{{"p", "s"}}));
  EXPECT_TRUE(s.calibration_log.empty());
  EXPECT_EQ(s.schedules[0].items, m.schedules[0].items);

  // Small relative steps lower R̃ until the last step that keeps both.
  const auto relative = gs_match(m, {});
  EXPECT_EQ(relative.assignment, (Assignment{{"p", "s"}}));
  ASSERT_EQ(relative.calibration_log.size(), 1u);
  EXPECT_GT(relative.calibration_log[0].steps, 0);
  EXPECT_GE(*hypothetical_utility(relative.schedules[0], "p", m.econ), 0.0);
}

TEST(Calibration, GivesUpAfterMaxRounds) {
  Market m = identical_pair(50.0);
  CalibrationPolicy p{CalibrationPolicy::Mode::relative, 0.01, 1};
  try {
    gs_match(m, p);
    FAIL() << "expected an unresolved tie";
  } catch (const UnresolvedTie& e) {
    EXPECT_EQ(e.subregion_id(), "s");
  }
}

TEST(Calibration, PolicyValidation) {
  EXPECT_THROW(validate(CalibrationPolicy{CalibrationPolicy::Mode::relative, 1.0, 5}),
               DomainError);
  EXPECT_THROW(validate(CalibrationPolicy{CalibrationPolicy::Mode::absolute, 0.0, 5}),
               DomainError);
  EXPECT_THROW(validate(CalibrationPolicy{CalibrationPolicy::Mode::absolute, 1.0, 0}),
               DomainError);
}

TEST(Stability, SixBySixOutputIsStable) {
  const auto r = run_match(fixture("fig6.scn"));
  EXPECT_TRUE(r.blocking.empty());
}

TEST(Stability, SwappingTheTopTwoCreatesABlockingPair) {
  const auto r = run_match(fixture("fig6.scn"));
  Assignment swapped = r.state.assignment;
  std::swap(swapped["1"], swapped["2"]);
  const auto blocking = stability_audit(swapped, r.preferences);
  EXPECT_NE(std::find(blocking.begin(), blocking.end(), BlockingPair{"1", "6"}), blocking.end());
}

TEST(Stability, EmptyAssignmentIsBlockedByEveryAcceptablePair) {
  const auto r = run_match(fixture("fig6.scn"));
  const auto blocking = stability_audit({}, r.preferences);
  std::size_t acceptable = 0;
  for (const auto& u : r.preferences.uavs) {
    for (const auto& n : u.ranked) acceptable += r.preferences.subregion(n).contains(u.owner);
  }
  EXPECT_EQ(blocking.size(), acceptable);
  EXPECT_EQ(acceptable, 36u);
}
