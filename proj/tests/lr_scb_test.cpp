#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "lrscb/lr_scb.hpp"
#include "test_support.hpp"

using namespace lrscb;
using test::vec;

TEST(EpochPlan, HandComputedExample) {
  const EpochPlan plan = build_epoch_plan(10000, 100, 0.1);
  EXPECT_EQ(plan.lengths, (std::vector<Round>{100, 921, 8483, 496}));
  ASSERT_EQ(plan.size(), 4u);
  EXPECT_EQ(plan.slacks, (std::vector<double>{0.1, 0.05, 0.025, 0.0125}));
}

TEST(EpochPlan, FirstLengthEqualToHorizonIsSingleEpoch) {
  const EpochPlan plan = build_epoch_plan(5000, 5000, 0.2);
  EXPECT_EQ(plan.lengths, (std::vector<Round>{5000}));
  EXPECT_EQ(plan.slacks, (std::vector<double>{0.2}));
}

TEST(EpochPlan, InvalidInputsNameTheField) {
  try {
    build_epoch_plan(100, 101, 0.1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "t1");
  }
  EXPECT_THROW(build_epoch_plan(100, 2, 0.1), ConfigError);
  EXPECT_THROW(build_epoch_plan(100, 10, 1.0), ConfigError);
}

TEST(EpochPlan, PartitionsHorizonWithIncreasingLengths) {
  const CounterStream s(1, StreamTag::audit);
  for (Round k = 0; k < 500; ++k) {
    const Round T = 3 + s.below(2 * k, 2000000);
    const Round t1 = 3 + s.below(2 * k + 1, T - 2);
    const EpochPlan plan = build_epoch_plan(T, t1, 0.1);
    ASSERT_EQ(std::accumulate(plan.lengths.begin(), plan.lengths.end(), Round{0}), T);
    ASSERT_EQ(plan.lengths.front(), t1);
    // every epoch but the remainder follows floor(T_1 (ln T)^(i-1))
    for (std::size_t i = 0; i + 1 < plan.size(); ++i) {
      const double exact = static_cast<double>(t1) * std::pow(std::log(static_cast<double>(T)), static_cast<double>(i));
      ASSERT_NEAR(static_cast<double>(plan.lengths[i]), std::floor(exact), 1.0);
      if (i > 0 && std::log(static_cast<double>(T)) > 1.0) {
        ASSERT_GT(plan.lengths[i], plan.lengths[i - 1]);
      }
      ASSERT_EQ(plan.slacks[i + 1], plan.slacks[i] / 2.0);
    }
  }
}

TEST(TheoreticalT1, DirectEvaluation) {
  const double l = std::log(2e4);
  const double expected = std::ceil(144.0 * std::pow(l, 4) * l);
  EXPECT_DOUBLE_EQ(theoretical_T1(2, 1.0 / 6.0, 2, 1000, 0.1), expected);
  EXPECT_NEAR(theoretical_T1(2, 1.0 / 6.0, 2, 1000, 0.1), 1.3716e7, 0.001e7);
}

TEST(TheoreticalT1, ScalesWithConstantAndFloor) {
  const double base = theoretical_T1(5, 0.1, 10, 100000, 0.05);
  EXPECT_NEAR(theoretical_T1(5, 0.1, 10, 100000, 0.05, 2.0), 2.0 * base, 2.0);
  EXPECT_NEAR(theoretical_T1(5, 0.05, 10, 100000, 0.05), 4.0 * base, 4.0);
}

TEST(ShiftReward, Examples) {
  EXPECT_EQ(shift_reward(1.25, vec({0.3, 0.4}), vec({0.0, 0.0})), 1.25);
  EXPECT_DOUBLE_EQ(shift_reward(2.0, vec({1.0, 0.5}), vec({0.25, 0.5})), 1.5);
  EXPECT_THROW(shift_reward(2.0, vec({1.0}), vec({0.25, 0.5})), ConfigError);
  const Vector theta = vec({0.3, -0.2, 0.5});
  const ContextSet ctx = sample_context_set(ContextLaw::uniform_box(3, 1.0), 5, CounterStream(1, StreamTag::contexts), 1);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(shift_reward(ctx.row(i).dot(theta), ctx.row(i).transpose(), theta), 0.0, 1e-16);
}

TEST(BoundCurve, LambdaIsOneWhenRatioIsLogT) {
  const Round T = 1000000;
  EXPECT_NEAR(lambda_factor_from_ratio(std::log(static_cast<double>(T)), T), 1.0, 1e-12);
}

TEST(BoundCurve, LinearInConstantAndIncreasingInHorizon) {
  const BoundCurvePoint a = bound_curve_eval(1, 10.0, 2, 1000000, 0.1, 1.0);
  const BoundCurvePoint b = bound_curve_eval(1, 10.0, 2, 1000000, 0.1, 2.0);
  const BoundCurvePoint c = bound_curve_eval(1, 10.0, 2, 100000000, 0.1, 1.0);
  ASSERT_TRUE(a.in_regime && b.in_regime && c.in_regime);
  EXPECT_DOUBLE_EQ(b.value, 2.0 * a.value);
  EXPECT_GT(c.value, a.value);
}

TEST(BoundCurve, DeskScaleIsOutOfRegime) {
  EXPECT_FALSE(bound_curve_eval(20, 1.0 / 60.0, 20, 1000000, 0.1).in_regime);
}

TEST(DimensionCondition, DirectEvaluation) {
  const double lt = std::log(1e6);
  const double need = lt / std::log(lt) * std::log(400.0 / 0.1);
  EXPECT_EQ(dimension_condition_holds(static_cast<int>(std::ceil(need)), 20, 1000000, 0.1), true);
  EXPECT_EQ(dimension_condition_holds(static_cast<int>(std::floor(need)), 20, 1000000, 0.1), false);
}

TEST(LrScbRun, SingleEpochEqualsOful) {
  const Environment env = random_instance_environment(4, 5, 1.0, 1.0, 1.0, 12);
  LrScbParams p;
  p.horizon = 3000;
  p.first_length = 3000;
  const LrScbResult r = lr_scb_run(env, p);
  const RunResult o = oful_run(env, OfulParams{}, 3000);
  EXPECT_EQ(r.trace.cumulative(), o.true_trace.cumulative());
  EXPECT_EQ(r.shift.est, o.estimate);
  ASSERT_EQ(r.epochs.size(), 1u);
  EXPECT_EQ(r.epochs[0].learner, EpochLearner::oful);
}

TEST(LrScbRun, FirstEpochPrefixMatchesStandaloneOful) {
  const Environment env = random_instance_environment(6, 8, 1.0, 1.0, 1.0, 44);
  LrScbParams p;
  p.horizon = 40000;
  p.first_length = 512;
  p.alb.tau = 100;
  const LrScbResult r = lr_scb_run(env, p);
  const RunResult o = oful_run(env, OfulParams{}, 512);
  for (const auto& cp : o.true_trace.checkpoints()) {
    const auto it = std::find_if(r.trace.checkpoints().begin(), r.trace.checkpoints().end(),
                                 [&](const auto& c) { return c.round == cp.round; });
    ASSERT_NE(it, r.trace.checkpoints().end());
    EXPECT_EQ(it->cumulative, cp.cumulative);
  }
  EXPECT_EQ(r.shift.per_epoch_estimates.front(), o.estimate);
}

TEST(LrScbRun, ShiftIsSumOfEpochEstimatesAndTraceCoversHorizon) {
  const Environment env = random_instance_environment(5, 6, 1.0, 1.0, 1.0, 3);
  LrScbParams p;
  p.horizon = 50000;
  p.alb.tau = 50;
  const LrScbResult r = lr_scb_run(env, p);
  EXPECT_EQ(r.trace.rounds(), 50000u);
  EXPECT_EQ(r.shifted_trace.rounds(), 50000u);
  Vector sum = Vector::Zero(5);
  for (const Vector& e : r.shift.per_epoch_estimates) sum += e;
  EXPECT_LE((sum - r.shift.est).cwiseAbs().maxCoeff(), 1e-15);
  ASSERT_EQ(r.epochs.size(), r.plan.size());
  Round next = 1;
  for (std::size_t i = 0; i < r.epochs.size(); ++i) {
    EXPECT_EQ(r.epochs[i].first_round, next);
    EXPECT_EQ(r.epochs[i].length, r.plan.lengths[i]);
    EXPECT_EQ(r.epochs[i].delta, r.plan.slacks[i]);
    if (i > 0 && i + 1 < r.epochs.size()) {
      EXPECT_EQ(r.epochs[i].learner, EpochLearner::alb_norm);
    }
    next += r.epochs[i].length;
  }
}

TEST(LrScbRun, NoiselessResidualNeverGrows) {
  for (int trial = 0; trial < 20; ++trial) {
    const Environment env = random_instance_environment(2, 2, 0.0, 1.0, 1.0, 200 + trial);
    LrScbParams p;
    p.horizon = 20000;
    p.first_length = 200;
    p.alb.tau = 20;
    const LrScbResult r = lr_scb_run(env, p);
    for (std::size_t i = 1; i < r.epochs.size(); ++i)
      EXPECT_LE(r.epochs[i].residual_norm, r.epochs[i - 1].residual_norm + 1e-9) << "trial " << trial;
  }
}

TEST(LrScbRun, ResidualShrinksFromFirstToLastEpoch) {
  int shrank = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Environment env = random_instance_environment(10, 10, 1.0, 1.0, 1.0, 600 + trial);
    LrScbParams p;
    p.horizon = 200000;
    p.alb.tau = 100;
    const LrScbResult r = lr_scb_run(env, p);
    shrank += r.epochs.back().residual_norm < r.epochs.front().residual_norm;
  }
  EXPECT_GE(shrank, 40);
}

TEST(LrScbRun, ShortSecondEpochIsRejectedBeforePlaying) {
  const Environment env = random_instance_environment(3, 4, 1.0, 1.0, 1.0, 1);
  LrScbParams p;
  p.horizon = 100000;
  p.first_length = 100;
  p.alb.tau = 1000;
  try {
    lr_scb_run(env, p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "tau");
  }
}

TEST(LrScbRun, ShortFinalEpochFallsBackToShiftedOful) {
  const Environment env = random_instance_environment(3, 4, 1.0, 1.0, 1.0, 1);
  LrScbParams p;
  // plan (100, 921, 8483, 496); only the last epoch is shorter than 2 tau + 1 = 601
  p.horizon = 10000;
  p.first_length = 100;
  p.alb.tau = 300;
  const LrScbResult r = lr_scb_run(env, p);
  ASSERT_EQ(r.epochs.size(), 4u);
  EXPECT_EQ(r.epochs[1].learner, EpochLearner::alb_norm);
  EXPECT_EQ(r.epochs[3].learner, EpochLearner::shifted_oful);
}

TEST(LrScbRun, WarnsWhenDimensionConditionFails) {
  const Environment env = random_instance_environment(3, 4, 1.0, 1.0, 1.0, 1);
  LrScbParams p;
  p.horizon = 5000;
  p.alb.tau = 10;
  EXPECT_FALSE(lr_scb_run(env, p).warnings.empty());
}
