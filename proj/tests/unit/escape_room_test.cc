#include <random>

#include <gtest/gtest.h>

#include "mgid/envs/escape_room.h"

namespace mgid::envs {
namespace {

TEST(EscapeRoomTest, LeverAndDoorInTwoOne) {
  EscapeRoom env({.n = 2, .m = 1});
  const int actions[] = {kLever, kDoor};
  ErStepResult r = env.Step(actions);
  EXPECT_EQ(r.rewards, (std::vector<double>{-1.0, 10.0}));
  EXPECT_TRUE(r.done);
}

TEST(EscapeRoomTest, StayingAtStartIsFreeAndNotDone) {
  EscapeRoom env({.n = 2, .m = 1});
  const int actions[] = {kStart, kStart};
  ErStepResult r = env.Step(actions);
  EXPECT_EQ(r.rewards, (std::vector<double>{0.0, 0.0}));
  EXPECT_FALSE(r.done);
}

TEST(EscapeRoomTest, ThresholdUnmetInFiveTwo) {
  // Agent 0 already holds the lever; the rest walk to the door.
  const int positions[] = {kLever, kStart, kStart, kStart, kStart};
  const int actions[] = {kLever, kDoor, kDoor, kDoor, kDoor};
  ErStepResult r = ErRewards(2, positions, actions);
  EXPECT_EQ(r.rewards[0], 0.0);
  for (int i = 1; i < 5; ++i) EXPECT_EQ(r.rewards[i], -1.0);
  EXPECT_FALSE(r.done);
}

TEST(EscapeRoomTest, EpisodeEndsAfterFiveSteps) {
  EscapeRoom env({.n = 3, .m = 1});
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> a(0, 2);
  for (int episode = 0; episode < 200; ++episode) {
    env.Reset();
    int steps = 0;
    while (!env.done()) {
      // Never pull the lever so nobody can exit.
      const int actions[] = {1 + a(rng) % 2, 1 + a(rng) % 2, 1 + a(rng) % 2};
      env.Step(actions);
      ++steps;
    }
    EXPECT_EQ(steps, 5);
  }
}

TEST(EscapeRoomTest, InvalidActionsThrow) {
  EscapeRoom env({.n = 2, .m = 1});
  const int bad[] = {0, 3};
  EXPECT_THROW(env.Step(bad), std::invalid_argument);
  const int too_few[] = {0};
  EXPECT_THROW(env.Step(too_few), std::invalid_argument);
  EXPECT_THROW(EscapeRoom({.n = 2, .m = 2}), std::invalid_argument);
}

TEST(EscapeRoomTest, ObservationsAreOneHotBlocks) {
  EscapeRoom env({.n = 3, .m = 1});
  const int actions[] = {kLever, kStart, kDoor};
  env.Step(actions);
  Eigen::RowVectorXd o1 = env.AgentObservation(1);
  // Own block first (start), then agent 0 (lever), then agent 2 (door).
  Eigen::RowVectorXd expected(9);
  expected << 0, 1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_TRUE(o1 == expected);
  Eigen::RowVectorXd d = env.DesignerObservation();
  expected << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_TRUE(d == expected);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(env.AgentObservation(i).sum(), 3.0);
  }
}

TEST(IncentiveTest, ZeroHeadIsNeutral) {
  const double env[] = {-1.0, 10.0};
  const double head[] = {0.0, 0.0, 0.0};
  const int actions[] = {0, 2};
  ErIncentiveResult r = ErApplyIncentives(env, head, actions);
  EXPECT_EQ(r.totals, (std::vector<double>{-1.0, 10.0}));
  EXPECT_EQ(r.psi, 0.0);
  EXPECT_EQ(r.designer_reward, 9.0);
}

TEST(IncentiveTest, DirectIndexing) {
  const double env[] = {0.0, 0.0, 0.0};
  const double head[] = {1.1, 0.0, 0.0};
  const int actions[] = {0, 1, 2};
  ErIncentiveResult r = ErApplyIncentives(env, head, actions);
  EXPECT_DOUBLE_EQ(r.totals[0], 1.1);
  EXPECT_EQ(r.totals[1], 0.0);
  EXPECT_DOUBLE_EQ(r.psi, 1.1);
  const double short_head[] = {1.0, 1.0};
  EXPECT_THROW(ErApplyIncentives(env, short_head, actions),
               std::invalid_argument);
}

TEST(OptimumTest, ClosedForms) {
  EXPECT_DOUBLE_EQ(ErOptimalWelfare({.n = 2, .m = 1}), 8.0);
  EXPECT_DOUBLE_EQ(ErOptimalWelfare({.n = 5, .m = 2}), 26.0);
  EXPECT_DOUBLE_EQ(ErOptimalWelfare({.n = 10, .m = 5}), 40.0);
  EXPECT_LT(ErOptimalWelfare({.n = 5, .m = 2}, 0.1), 26.0);
}

TEST(OptimumTest, BruteForceMatchesFormula) {
  for (int n = 2; n <= 5; ++n) {
    for (int m = 1; m < n; ++m) {
      ErConfig c{.n = n, .m = m};
      EXPECT_DOUBLE_EQ(ErBruteForceOptimum(c, false), ErWelfareUpperBound(c))
          << n << "," << m;
      EXPECT_DOUBLE_EQ(ErBruteForceOptimum(c, true), ErOptimalWelfare(c))
          << n << "," << m;
    }
  }
}

}  // namespace
}  // namespace mgid::envs
