#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "lrscb/oful.hpp"
#include "test_support.hpp"

using namespace lrscb;
using test::make_contexts;
using test::vec;

TEST(ConfidenceRadius, DirectEvaluation) {
  EXPECT_NEAR(confidence_radius(1.0, 4, 0.5, 4, 2, 50, 1.0), 3.0 * std::log(100.0), 1e-12);
  EXPECT_NEAR(confidence_radius(1.0, 4, 0.5, 4, 2, 50, 1.0), 13.8155, 1e-4);
}

TEST(ConfidenceRadius, QuartersTimeHalvesRadius) {
  for (Round u : {1u, 3u, 17u, 1000u}) {
    const double a = confidence_radius(0.7, 9, 0.2, u, 5, 1000, 0.05);
    const double b = confidence_radius(0.7, 9, 0.2, 4 * u, 5, 1000, 0.05);
    EXPECT_DOUBLE_EQ(b / a, 0.5);
  }
}

TEST(ConfidenceRadius, LogOfOneIsZero) { EXPECT_EQ(confidence_radius(1.0, 3, 0.1, 10, 1, 1, 1.0), 0.0); }

TEST(ConfidenceRadius, InfiniteBeforeAnyData) {
  EXPECT_EQ(confidence_radius(1.0, 3, 0.1, 0, 2, 10, 0.1), std::numeric_limits<double>::infinity());
}

TEST(ConfidenceRadius, RejectsBadSlack) {
  EXPECT_THROW(confidence_radius(1.0, 3, 0.1, 1, 2, 10, 0.0), ConfigError);
  EXPECT_THROW(confidence_radius(1.0, 3, 0.1, 1, 2, 10, 1.5), ConfigError);
}

TEST(OptimisticSelect, ZeroCenterPicksLargestNorm) {
  const auto ctx = make_contexts({{0.3, 0.0}, {0.0, 0.4}});
  ConfidenceBall ball{vec({0.0, 0.0}), 1.0};
  EXPECT_EQ(optimistic_select(ctx, ball), 1);
}

TEST(OptimisticSelect, HandEvaluatedIndices) {
  const auto ctx = make_contexts({{0.6, 0.0}, {0.2, 0.8}});
  ConfidenceBall ball{vec({1.0, 0.0}), 0.5};
  // 0.6 + 0.5 * 0.6 = 0.9 against 0.2 + 0.5 * sqrt(0.68) = 0.6123
  EXPECT_EQ(optimistic_select(ctx, ball), 0);
  EXPECT_NEAR(0.2 + 0.5 * std::sqrt(0.68), 0.6123, 1e-4);
}

TEST(OptimisticSelect, ZeroRadiusIsGreedy) {
  const ContextLaw law = ContextLaw::uniform_box(6, 1.0);
  const CounterStream s(3, StreamTag::contexts), p(4, StreamTag::instance);
  for (Round r = 1; r <= 1000; ++r) {
    const ContextSet ctx = sample_context_set(law, 11, s, r);
    Vector center(6);
    for (int j = 0; j < 6; ++j) center[j] = p.normal(r * 8 + static_cast<Round>(j));
    ConfidenceBall ball{center, 0.0};
    // brute force argmax with lowest-index ties
    ArmIndex brute = 0;
    for (ArmIndex i = 1; i < 11; ++i)
      if (ctx.row(i).dot(center) > ctx.row(brute).dot(center)) brute = i;
    ASSERT_EQ(optimistic_select(ctx, ball), brute);
  }
}

TEST(OptimisticSelect, TiesGoToLowestIndex) {
  const auto ctx = make_contexts({{0.5, 0.0}, {0.5, 0.0}, {0.0, 0.5}});
  ConfidenceBall ball{vec({1.0, 1.0}), 0.0};
  EXPECT_EQ(optimistic_select(ctx, ball), 0);
}

TEST(RidgeState, EmptyStateHasZeroEstimate) {
  const RidgeState s(3, 1.0);
  EXPECT_EQ(s.estimate(), Vector::Zero(3));
  EXPECT_EQ(s.rounds_seen(), 0u);
}

TEST(RidgeState, SingleUpdateTwoByTwo) {
  const RidgeState s = ridge_update(RidgeState(2, 1.0), vec({1.0, 0.0}), 2.0);
  EXPECT_NEAR(s.estimate()[0], 1.0, 1e-15);
  EXPECT_NEAR(s.estimate()[1], 0.0, 1e-15);
  EXPECT_EQ(s.gram(), (Eigen::MatrixXd(2, 2) << 2, 0, 0, 1).finished());
  EXPECT_EQ(s.moment(), vec({2.0, 0.0}));
}

TEST(RidgeState, ScalarClosedForm) {
  RidgeState s(2, 1.0);
  for (int n = 1; n <= 200; ++n) {
    s = ridge_update(std::move(s), vec({1.0, 0.0}), 1.0);
    ASSERT_NEAR(s.estimate()[0], n / (n + 1.0), 1e-12);
  }
}

TEST(RidgeState, MatchesDirectSolveAndKeepsInverseAccurate) {
  const int d = 12;
  RidgeState s(d, 0.5);
  Eigen::MatrixXd gram = 0.5 * Eigen::MatrixXd::Identity(d, d);
  Vector moment = Vector::Zero(d);
  const ContextLaw law = ContextLaw::uniform_box(d, 1.0);
  const CounterStream ctx_stream(1, StreamTag::contexts), y_stream(2, StreamTag::noise);
  for (Round r = 1; r <= 10000; ++r) {
    const ContextSet ctx = sample_context_set(law, 1, ctx_stream, r);
    const Vector x = ctx.contexts.row(0).transpose();
    const double y = y_stream.normal(r);
    s.update(x.transpose(), y);
    gram += x * x.transpose();
    moment += y * x;
    if (r % 997 == 0 || r == 10000) {
      const Vector direct = gram.ldlt().solve(moment);
      ASSERT_LE((s.estimate() - direct).cwiseAbs().maxCoeff(), 1e-9) << "round " << r;
      ASSERT_LE(s.inverse_residual(), 1e-6) << "round " << r;
      ASSERT_LE((s.gram() - gram).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(RidgeState, RejectsBadArguments) {
  EXPECT_THROW(RidgeState(0, 1.0), ConfigError);
  EXPECT_THROW(RidgeState(2, 0.0), ConfigError);
  EXPECT_THROW(ridge_update(RidgeState(2, 1.0), vec({1.0}), 0.0), ConfigError);
}

TEST(ClippedRadius, CapsAtNormBoundPlusRootD) {
  OfulParams p;
  EXPECT_DOUBLE_EQ(clipped_radius(p, 4, 0.01, 1, 10, 100), 3.0);
  EXPECT_DOUBLE_EQ(clipped_radius(p, 4, 0.01, 0, 10, 100), 3.0);
  p.radius_scale = 1e-6;
  EXPECT_LT(clipped_radius(p, 4, 0.01, 1, 10, 100), 3.0);
}

TEST(OfulRun, ZeroShiftTracesCoincide) {
  const Environment env = test::box_environment(vec({0.3, -0.5, 0.4}), 5, 1.0, 17);
  const RunResult r = oful_run(env, OfulParams{}, 3000);
  EXPECT_EQ(r.true_trace.cumulative(), r.shifted_trace.cumulative());
  ASSERT_EQ(r.true_trace.checkpoints().size(), r.shifted_trace.checkpoints().size());
  for (std::size_t i = 0; i < r.true_trace.checkpoints().size(); ++i)
    EXPECT_EQ(r.true_trace.checkpoints()[i].cumulative, r.shifted_trace.checkpoints()[i].cumulative);
}

TEST(OfulRun, FullyCompensatedShiftLearnsNothing) {
  const Vector theta = vec({0.3, -0.5, 0.4});
  const Environment env = test::box_environment(theta, 5, 0.0, 17);
  for (ShiftFrame frame : {ShiftFrame::restored, ShiftFrame::residual}) {
    OfulParams p;
    p.frame = frame;
    const RunResult r = oful_run(env, p, 2000, theta);
    EXPECT_LE(r.estimate.norm(), 1e-12);
    EXPECT_EQ(r.shifted_trace.cumulative(), 0.0);
  }
}

TEST(OfulRun, CheckpointCountMatchesGrid) {
  const Environment env = test::box_environment(vec({0.3, -0.5}), 3, 1.0, 2);
  const RunResult r = oful_run(env, OfulParams{}, 256);
  EXPECT_EQ(r.true_trace.checkpoints().size(), 9u);
  EXPECT_EQ(r.true_trace.rounds(), 256u);
}

TEST(OfulRun, DeterministicForFixedSeed) {
  const Environment a = random_instance_environment(6, 7, 1.0, 1.0, 1.0, 5);
  const Environment b = random_instance_environment(6, 7, 1.0, 1.0, 1.0, 5);
  std::vector<ArmIndex> arms_a, arms_b;
  const RunResult ra = oful_run(a, OfulParams{}, 2000, Vector::Zero(6), 1,
                                [&](const RoundRecord& rec) { arms_a.push_back(rec.chosen); });
  const RunResult rb = oful_run(b, OfulParams{}, 2000, Vector::Zero(6), 1,
                                [&](const RoundRecord& rec) { arms_b.push_back(rec.chosen); });
  EXPECT_EQ(arms_a, arms_b);
  EXPECT_EQ(ra.true_trace.cumulative(), rb.true_trace.cumulative());
  EXPECT_EQ(ra.estimate, rb.estimate);
}

TEST(OfulRun, ObserverSeesTrueGapsAndOptimisticChoice) {
  const Environment env = test::box_environment(vec({0.5, 0.5, -0.2}), 6, 1.0, 8);
  double sum = 0.0;
  Round rounds = 0;
  const RunResult r = oful_run(env, OfulParams{}, 500, Vector::Zero(3), 1, [&](const RoundRecord& rec) {
    ++rounds;
    EXPECT_EQ(rec.round, rounds);
    EXPECT_DOUBLE_EQ(rec.true_gap, regret_increment(env.instance(), rec.ctx, rec.chosen));
    sum += rec.true_gap;
  });
  EXPECT_DOUBLE_EQ(sum, r.true_trace.cumulative());
}

TEST(OfulRun, EstimationErrorShrinksWithHorizonInMostTrials) {
  int better = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Environment env = random_instance_environment(2, 2, 1.0, 1.0, 1.0, 1000 + trial);
    const double early = (oful_run(env, OfulParams{}, 1000).estimate - env.instance().theta_star).norm();
    const double late = (oful_run(env, OfulParams{}, 10000).estimate - env.instance().theta_star).norm();
    better += late < early;
  }
  EXPECT_GE(better, 45);
}

TEST(OfulRun, MeanErrorDecaysLikeInverseRootT) {
  const Round u = 2500;
  double early = 0.0, late = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const Environment env = random_instance_environment(5, 10, 1.0, 1.0, 1.0, 500 + trial);
    early += (oful_run(env, OfulParams{}, u).estimate - env.instance().theta_star).norm();
    late += (oful_run(env, OfulParams{}, 4 * u).estimate - env.instance().theta_star).norm();
  }
  EXPECT_LE(late, 0.7 * early);
}
