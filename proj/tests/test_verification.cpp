#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "uavfl/errors.hpp"
#include "uavfl/runner.hpp"
#include "uavfl/scenario.hpp"
#include "uavfl/verification.hpp"

using namespace uavfl;

namespace {

EconomyParams demo_econ() {
  EconomyParams e;
  e.sigma = 100.0;
  return e;
}

Subregion demo_sub(const std::string& id = "1") {
  Subregion s;
  s.id = id;
  s.full_distance = 1000.0;
  s.data_volume = 10.0;
  return s;
}

AuxiliaryType demo_type(double upsilon = 13.5) {
  AuxiliaryType t;
  t.rank = 1;
  t.uav_id = "a";
  t.upsilon = upsilon;
  return t;
}

// Subregion "1" prefers UAV a and "2" prefers b; each UAV prefers the other
// subregion, where its fixed cost is lower. Two stable matchings exist.
Market opposed_market() {
  Market m;
  m.econ = demo_econ();
  m.econ.n_subregions = 2;
  m.uav_ids = {"a", "b"};
  const std::vector<Announcer> at1 = {{"a", 100, 0, 100, 0}, {"b", 300, 0, 0, 0}};
  const std::vector<Announcer> at2 = {{"a", 300, 0, 0, 0}, {"b", 100, 0, 100, 0}};
  m.schedules.push_back(build_schedule(at1, demo_sub("1"), m.econ, 50.0));
  m.schedules.push_back(build_schedule(at2, demo_sub("2"), m.econ, 50.0));
  return m;
}

}  // namespace

TEST(GridOracle, MatchesWorkedCoverageWithinTwoSteps) {
  const int points = 10001;
  const double theta = grid_oracle_coverage(demo_type(), demo_sub(), demo_econ(), points);
  EXPECT_NEAR(theta, (100.0 / 13.5 - 1.0) / 10.0, 2.0 / (points - 1));
  EXPECT_EQ(theta, grid_oracle_coverage_parallel(demo_type(), demo_sub(), demo_econ(), points));
}

TEST(GridOracle, VanishingValueGivesZeroCoverage) {
  auto econ = demo_econ();
  econ.sigma = 1e-9;
  EXPECT_EQ(grid_oracle_coverage(demo_type(), demo_sub(), econ), 0.0);
}

TEST(GridOracle, FixedRewardDoesNotMoveTheArgmax) {
  EXPECT_EQ(grid_oracle_coverage(demo_type(), demo_sub(), demo_econ(), 2001, 0.0),
            grid_oracle_coverage(demo_type(), demo_sub(), demo_econ(), 2001, 250.0));
}

TEST(GridOracle, ObjectiveIsUnimodalOnRandomDraws) {
  for (std::size_t i = 0; i < 100; ++i) {
    const auto d = random_coverage_draw(5, i);
    EXPECT_TRUE(grid_objective_unimodal(d.type, d.sub, d.econ, 2001)) << "draw " << i;
  }
}

TEST(GridOracle, SerialAndParallelAgreeBitwise) {
  for (std::size_t i = 0; i < 50; ++i) {
    const auto d = random_coverage_draw(8, i);
    EXPECT_EQ(grid_oracle_coverage(d.type, d.sub, d.econ, 4001),
              grid_oracle_coverage_parallel(d.type, d.sub, d.econ, 4001));
  }
}

TEST(GridOracle, ConfigValidation) {
  EXPECT_THROW(validate(OracleConfig{1, 1e-9, 8}), DomainError);
  EXPECT_THROW(validate(OracleConfig{101, -1.0, 8}), DomainError);
  EXPECT_NO_THROW(validate(OracleConfig{}));
}

TEST(IcMatrix, TwoTypeValues) {
  const std::vector<Announcer> a = {{"a", 250, 20, 0, 0}, {"b", 875, 70, 0, 0}};
  const auto s = build_schedule(a, demo_sub(), demo_econ(), 0.0);
  const Matrix m = ic_matrix(s, 0.05);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(m[0][0], 3.767, 1e-3);
  EXPECT_NEAR(m[0][1], 3.767, 1e-3);
  EXPECT_NEAR(m[1][0], -17.857, 1e-3);
  EXPECT_NEAR(m[1][1], 0.0, 1e-12);
  EXPECT_TRUE(diagonal_dominant(m));
}

TEST(IcMatrix, SingleRung) {
  const auto s = build_schedule(std::vector<Announcer>{{"a", 250, 20, 0, 0}}, demo_sub(),
                                demo_econ(), 0.0);
  const Matrix m = ic_matrix(s, 0.05);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_GE(m[0][0], -1e-12);
  EXPECT_TRUE(diagonal_dominant(m));
}

TEST(IcMatrix, UtilityMatrixAddsFixedTerms) {
  const std::vector<Announcer> a = {{"a", 250, 20, 40, 4}, {"b", 875, 70, 10, 2}};
  const auto s = build_schedule(a, demo_sub(), demo_econ(), 3.0);
  const Matrix revised = ic_matrix(s, 0.05);
  const Matrix full = utility_matrix(s, demo_econ());
  for (std::size_t i = 0; i < 2; ++i) {
    const double fixed = 3.0 - 0.05 * (s.ladder[i].psi + s.ladder[i].zeta);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(full[i][k], revised[i][k] + fixed, 1e-12);
  }
}

TEST(IcMatrix, DominanceAgreesWithAuditOnPerturbedSchedules) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (std::size_t i = 0; i < 200; ++i) {
    auto s = random_schedule(21, i).schedule;
    const double phi = random_schedule(21, i).econ.phi;
    for (auto& item : s.items) item.reward_tilde = std::max(0.0, item.reward_tilde + noise(rng));
    const auto audit = audit_schedule(s, phi);
    EXPECT_EQ(audit.ic_ok, diagonal_dominant(ic_matrix(s, phi)));
  }
}

TEST(RowArgmax, ToleranceGroupsNearTies) {
  EXPECT_EQ(row_argmax({1.0, 3.0, 3.0 - 1e-12, 2.0}), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(row_argmax({5.0}), (std::vector<std::size_t>{0}));
}

TEST(Enumeration, SinglePairHasOneStableMatching) {
  PreferenceProfile p;
  p.subregions.push_back({"s", {"u"}, {1.0}});
  p.uavs.push_back({"u", {"s"}, {1.0}});
  const auto all = enumerate_stable_matchings(p);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0], (Assignment{{"u", "s"}}));
}

TEST(Enumeration, OpposedPreferencesHaveTwoAndProposersGetTheirBest) {
  const Market m = opposed_market();
  const auto prefs = build_preferences(m.schedules, m.uav_ids, m.econ);
  ASSERT_EQ(prefs.subregion("1").ranked, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(prefs.uav("a").ranked, (std::vector<std::string>{"2", "1"}));
  const auto all = enumerate_stable_matchings(prefs);
  ASSERT_EQ(all.size(), 2u);
  const auto gs = gs_match(m).assignment;
  EXPECT_EQ(gs, (Assignment{{"a", "1"}, {"b", "2"}}));
  EXPECT_NE(std::find(all.begin(), all.end(), gs), all.end());
  EXPECT_TRUE(is_proposer_optimal(gs, all, prefs));
  EXPECT_FALSE(is_proposer_optimal(Assignment{{"a", "2"}, {"b", "1"}}, all, prefs));
}

TEST(Enumeration, SixBySixFixtureHasGsOutputAmongStableSet) {
  const auto r = run_match(load_scenario(std::string(UAVFL_SCENARIO_DIR) + "/fig6.scn"));
  ASSERT_TRUE(tie_free(r.preferences));
  const auto all = enumerate_stable_matchings(r.preferences);
  EXPECT_NE(std::find(all.begin(), all.end(), r.state.assignment), all.end());
  EXPECT_TRUE(is_proposer_optimal(r.state.assignment, all, r.preferences));
}

TEST(Enumeration, RefusesTiesAndOversizedInstances) {
  const Market m = opposed_market();
  const auto prefs = build_preferences(m.schedules, m.uav_ids, m.econ);
  EXPECT_THROW(enumerate_stable_matchings(prefs, 1), DomainError);

  const auto tied = prepare(load_scenario(std::string(UAVFL_SCENARIO_DIR) + "/table3.scn"));
  const auto tp = build_preferences(tied.market.schedules, tied.market.uav_ids, tied.market.econ);
  EXPECT_FALSE(tie_free(tp));
  EXPECT_THROW(enumerate_stable_matchings(tp), DomainError);
}

TEST(RandomInstances, SameSeedAndIndexGiveSameInstance) {
  for (std::size_t i = 0; i < 20; ++i) {
    const Market a = random_market(3, i);
    const Market b = random_market(3, i);
    ASSERT_EQ(a.schedules.size(), b.schedules.size());
    for (std::size_t n = 0; n < a.schedules.size(); ++n) {
      EXPECT_EQ(a.schedules[n].items, b.schedules[n].items);
    }
    EXPECT_EQ(random_schedule(3, i).schedule.items, random_schedule(3, i).schedule.items);
  }
  EXPECT_NE(random_schedule(3, 0).schedule.items, random_schedule(4, 0).schedule.items);
}

TEST(Sweeps, SerialAndParallelAgree) {
  const auto c1 = coverage_agreement_sweep(11, 200, 2001, 1e-3);
  const auto c2 = coverage_agreement_sweep_parallel(11, 200, 2001, 1e-3);
  EXPECT_EQ(c1, c2);
  EXPECT_EQ(c1.failures, 0u);
  EXPECT_EQ(c1.draws, 200u);

  const auto s1 = stability_sweep(11, 100);
  const auto s2 = stability_sweep_parallel(11, 100);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.failures(), 0u);
}

TEST(Sweeps, RepeatRunsAreIdentical) {
  EXPECT_EQ(stability_sweep_parallel(12, 60), stability_sweep_parallel(12, 60));
  EXPECT_EQ(coverage_agreement_sweep_parallel(12, 100, 1001, 2e-3),
            coverage_agreement_sweep_parallel(12, 100, 1001, 2e-3));
}
