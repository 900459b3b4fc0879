#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "wncs/bandit.hpp"
#include "wncs/error.hpp"
#include "wncs/presets.hpp"

using namespace wncs;
using Eigen::MatrixXd;

TEST(BanditState, Validation) {
  EXPECT_THROW(BanditState(0), Error);
  EXPECT_THROW(BanditState(2, -1.0, 0.5), Error);
  EXPECT_THROW(BanditState(2, 0.6, 0.5), Error);
  EXPECT_NO_THROW(BanditState(2, -0.9, 0.9));
}

TEST(BanditState, RewardUpdate) {
  BanditState s(2);
  s.reward_update(0, true);
  EXPECT_EQ(s.mean_reward(0), 1.0);
  for (int k = 0; k < 9; ++k) s.reward_update(1, k < 4);
  s.reward_update(1, false);
  EXPECT_DOUBLE_EQ(s.mean_reward(1), 0.4);
  EXPECT_EQ(s.total_plays(), 11);
  EXPECT_EQ(s.plays(1), 10);
  EXPECT_TRUE(s.warmed_up());
}

TEST(BanditState, LongRunMean) {
  BanditState s(1);
  const LinkQualityMatrix q(MatrixXd::Constant(1, 1, 0.7));
  const CounterRng rng(5);
  const int n = 100000;
  for (int k = 0; k < n; ++k) s.reward_update(0, link_success(q, rng, 0, 0, k));
  EXPECT_LT(std::abs(s.mean_reward(0) - 0.7), 3 * std::sqrt(0.7 * 0.3 / n));
}

TEST(UcbIndex, Formula) {
  BanditState s(2);
  for (int k = 0; k < 8; ++k) s.reward_update(0, k % 2 == 0);
  for (int k = 0; k < 3; ++k) s.reward_update(1, true);
  const double z = 11.0;
  EXPECT_NEAR(ucb_index(s, 0, 0.0), 0.5 + std::sqrt(2 * std::log(z) / 8), 1e-15);
  EXPECT_NEAR(ucb_index(s, 0, 0.25), 0.5 + std::sqrt(2 * std::log(z) / 8.25), 1e-15);
  // The documented example: mean 0.5, ln z = 2, z_j = 8.
  EXPECT_NEAR(0.5 + std::sqrt(2 * 2.0 / 8), 1.20711, 1e-5);
}

TEST(UcbIndex, BoundaryInflation) {
  BanditState s(2);
  s.reward_update(0, false);
  for (int k = 0; k < 5; ++k) s.reward_update(1, false);
  EXPECT_NEAR(ucb_index(s, 0, -0.5), 2 * std::sqrt(std::log(6.0)), 1e-14);
}

TEST(UcbIndex, UnplayedArm) {
  BanditState s(2);
  s.reward_update(0, true);
  EXPECT_THROW(ucb_index(s, 1, 0.0), Error);
}

TEST(Warmup, CoversEveryPairOnce) {
  const CounterRng rng(4);
  for (auto [n, m] : {std::pair{2, 1}, std::pair{3, 2}, std::pair{5, 4}}) {
    const auto w = warmup_schedule(n, m, rng);
    ASSERT_EQ(w.size(), static_cast<std::size_t>(n * m));
    std::set<std::pair<int, int>> seen;
    for (const auto& a : w) seen.insert({a.subsystem, a.channel});
    EXPECT_EQ(seen.size(), w.size());
    std::vector<BanditState> states(n, BanditState(m));
    for (const auto& a : w) states[a.subsystem].reward_update(a.channel, true);
    for (const auto& s : states) {
      for (int j = 0; j < m; ++j) EXPECT_EQ(s.plays(j), 1);
    }
  }
}

TEST(Epsilon, DistinctIndicesAndBounds) {
  BanditState s(3);
  for (int j = 0; j < 3; ++j) s.reward_update(j, true);
  const CounterRng rng(6);
  const PerturbedUcb1 ucb;
  for (std::uint64_t k = 0; k < 100000; ++k) {
    double idx[3];
    for (int j = 0; j < 3; ++j) {
      const double e = draw_epsilon(s, rng, 0, j, k);
      ASSERT_GE(e, -0.5);
      ASSERT_LT(e, 0.5);
      idx[j] = ucb.index(0, s, j, e);
    }
    ASSERT_NE(idx[0], idx[1]);
    ASSERT_NE(idx[1], idx[2]);
    ASSERT_NE(idx[0], idx[2]);
  }
}

TEST(Algorithm1, SingleLoopSingleChannel) {
  const SubsystemModel model(presets::scalar_fixture());
  std::vector<CoilTable> tables{CoilTable(model)};
  std::vector<BanditState> states{BanditState(1)};
  states[0].reward_update(0, true);
  const LinkQualityMatrix q(MatrixXd::Constant(1, 1, 0.6));
  const CounterRng rng(7);
  const PerturbedUcb1 ucb;
  long long floors = 0;
  std::vector<int> ages{0};
  for (std::uint64_t k = 1; k < 500; ++k) {
    const auto st = algorithm1_step(states, tables, ages, q, ucb, rng, k, {}, floors);
    ASSERT_EQ(st.allocation.size(), 1u);
    EXPECT_EQ(st.chosen[0], 0);
    ages[0] = st.outcome.theta[0] ? 0 : ages[0] + 1;
  }
  EXPECT_EQ(states[0].plays(0), 500);
}

TEST(Algorithm1, LosersDoNotUpdate) {
  const SubsystemModel model(presets::scalar_fixture());
  std::vector<CoilTable> tables{CoilTable(model), CoilTable(model), CoilTable(model)};
  std::vector<BanditState> states(3, BanditState(1));
  for (auto& s : states) s.reward_update(0, true);
  const LinkQualityMatrix q(MatrixXd::Constant(3, 1, 0.5));
  const CounterRng rng(8);
  const PerturbedUcb1 ucb;
  long long floors = 0;
  const std::vector<int> ages{0, 4, 1};
  const auto st = algorithm1_step(states, tables, ages, q, ucb, rng, 10, {}, floors);
  EXPECT_EQ(st.chosen[1], 0);
  EXPECT_FALSE(st.chosen[0].has_value());
  EXPECT_EQ(states[0].plays(0), 1);
  EXPECT_EQ(states[1].plays(0), 2);
  EXPECT_EQ(states[2].plays(0), 1);
}

TEST(Algorithm1, KnownQualityMatchesTimerPolicy) {
  const SubsystemModel model(presets::segway());
  std::vector<CoilTable> tables{CoilTable(model), CoilTable(model), CoilTable(model)};
  const LinkQualityMatrix q(presets::table1_link_quality());
  std::vector<BanditState> states(3, BanditState(2));
  const KnownQuality known(q);
  const CounterRng rng(9);
  Algorithm1Options opts;
  opts.perturb = false;
  long long floors = 0;
  std::vector<int> ages{0, 0, 0};
  for (std::uint64_t k = 0; k < 2000; ++k) {
    MatrixXd w(3, 2);
    for (int i = 0; i < 3; ++i) w.row(i) = tables[i].coil(ages[i]) * q.matrix().row(i);
    const Allocation direct = resolve_contention(compute_timers(w, 1.0));
    const auto st = algorithm1_step(states, tables, ages, q, known, rng, k, opts, floors);
    ASSERT_EQ(st.allocation, direct) << "slot " << k;
    ASSERT_EQ(transmit(direct, q, rng, k).theta, st.outcome.theta);
    for (int i = 0; i < 3; ++i) ages[i] = st.outcome.theta[i] ? 0 : ages[i] + 1;
  }
}

TEST(Algorithm1, RowScalingKeepsFirstClaim) {
  // Timers within one row keep their order under positive scaling.
  const MatrixXd qhat = (MatrixXd(1, 3) << 0.3, 0.9, 0.5).finished();
  for (double c : {0.1, 1.0, 42.0}) {
    const Allocation a = resolve_contention(compute_timers(c * qhat, 1.0));
    EXPECT_EQ(a.pairs()[0].channel, 1);
  }
}
