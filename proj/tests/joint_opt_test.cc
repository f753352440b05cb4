#include "autocalib/joint_opt.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "autocalib/error.h"
#include "autocalib/planar_calib.h"
#include "test_util.h"

namespace autocalib {
namespace {

using testing::CrossPairs;
using testing::ExactPairs;
using testing::NoisyPairs;
using testing::RandomSim2;
using testing::Sim2MaxError;

TEST(RelativeCalibration, Examples) {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 100; ++i) {
    const Sim2 a = RandomSim2(rng);
    const Sim2 b = RandomSim2(rng);
    EXPECT_LT(Sim2MaxError(RelativeCalibration(a, a), Sim2::Identity()), 1e-12);
    EXPECT_LT(Sim2MaxError(RelativeCalibration(Sim2::Identity(), b), b), 1e-12);
    EXPECT_LT(Sim2MaxError(Compose(a, RelativeCalibration(a, b)), b), 1e-12);
  }
}

TEST(RecoverMetricZ, Examples) {
  EXPECT_DOUBLE_EQ(RecoverMetricZ(GroundAlignment(0.8, 0, 0), 1.5), 1.2);
  EXPECT_DOUBLE_EQ(RecoverMetricZ(GroundAlignment(0.8, 0.1, 0.2), 1.0), 0.8);
}

TEST(EvaluateResidual, MatchesTranslationErrorForm) {
  std::mt19937_64 rng(72);
  for (int i = 0; i < 100; ++i) {
    const Sim2 a = RandomSim2(rng);
    const Sim2 b = RandomSim2(rng);
    const MotionPair p = NoisyPairs(RandomSim2(rng), 1, 0.3, 0.3, rng)[0];
    // Residual = p_i.t - trans(X p_j X^-1) with X = a^-1 b, in matrix form.
    const Eigen::Matrix3d x = testing::ToMatrix(a).inverse() * testing::ToMatrix(b);
    const Eigen::Matrix3d pred = x * testing::ToMatrix(p.p_j.ToSim2()) * x.inverse();
    const Eigen::Vector2d expected = p.p_i.translation() - pred.block<2, 1>(0, 2);
    EXPECT_LT((EvaluateResidual(a, b, p).residual - expected).norm(), 1e-10);
  }
}

TEST(EvaluateResidual, JacobiansMatchCentralDifferences) {
  std::mt19937_64 rng(73);
  const double h = 1e-6;
  for (int i = 0; i < 10; ++i) {
    const Sim2 a = RandomSim2(rng, 1.0, 0.5, 2.0);
    const Sim2 b = RandomSim2(rng, 1.0, 0.5, 2.0);
    const MotionPair p = NoisyPairs(RandomSim2(rng), 1, 0.3, 0.3, rng)[0];
    const ResidualJacobian rj = EvaluateResidual(a, b, p);
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector4d d = Eigen::Vector4d::Zero();
      d(k) = h;
      const Eigen::Vector2d num_first = (EvaluateResidual(Retract(a, d), b, p).residual -
                                         EvaluateResidual(Retract(a, -d), b, p).residual) /
                                        (2 * h);
      const Eigen::Vector2d num_second = (EvaluateResidual(a, Retract(b, d), p).residual -
                                          EvaluateResidual(a, Retract(b, -d), p).residual) /
                                         (2 * h);
      const double scale_first = std::max(1.0, num_first.norm());
      const double scale_second = std::max(1.0, num_second.norm());
      EXPECT_LT((rj.d_first.col(k) - num_first).norm() / scale_first, 1e-6);
      EXPECT_LT((rj.d_second.col(k) - num_second).norm() / scale_second, 1e-6);
    }
  }
}

TEST(JointProblem, Validation) {
  JointProblem p;
  p.n_sensors = 2;
  p.metric = {true, false};
  p.initial = {Sim2::Identity()};
  p.blocks = {{0, 1, {}}};
  EXPECT_THROW(p.Validate(), CalibError);  // empty block
  std::mt19937_64 rng(74);
  p.blocks = {{0, 1, ExactPairs(Sim2::Identity(), 3, rng)}};
  EXPECT_NO_THROW(p.Validate());
  p.blocks.push_back({1, 0, ExactPairs(Sim2::Identity(), 3, rng)});
  EXPECT_THROW(p.Validate(), CalibError);  // first sensor of the block is not metric
  p.blocks.pop_back();
  p.loss_scale = 0.0;
  EXPECT_THROW(p.Validate(), CalibError);
}

TEST(JointRefine, ExactDataStaysPut) {
  std::mt19937_64 rng(75);
  const Sim2 truth = RandomSim2(rng, 1.0, 0.5, 2.0);
  const auto pairs = ExactPairs(truth, 40, rng);
  JointProblem p;
  p.n_sensors = 2;
  p.metric = {true, false};
  p.initial = {SolvePairwise(pairs).params};
  p.blocks = {{0, 1, pairs}};
  const JointResult r = JointRefine(p);
  EXPECT_LT(Sim2MaxError(r.params[0], p.initial[0]), 1e-9);
}

TEST(JointRefine, RecoversFromPerturbedStart) {
  std::mt19937_64 rng(76);
  for (auto loss : {RobustLoss::kCauchy, RobustLoss::kCauchyPerComponent, RobustLoss::kTrivial}) {
    const Sim2 truth(0.4, -0.3, 0.6, 1.7);
    const auto pairs = ExactPairs(truth, 60, rng);
    JointProblem p;
    p.n_sensors = 2;
    p.metric = {true, false};
    p.initial = {Sim2(truth.x() + 0.1, truth.y() + 0.1, truth.theta() + 0.1, truth.scale() + 0.1)};
    p.blocks = {{0, 1, pairs}};
    p.loss = loss;
    p.loss_scale = 1.0;
    const JointResult r = JointRefine(p);
    EXPECT_LT(Sim2MaxError(r.params[0], truth), 1e-6) << static_cast<int>(loss);
  }
}

TEST(JointRefine, CostTraceNonIncreasing) {
  std::mt19937_64 rng(77);
  const Sim2 truth = RandomSim2(rng, 1.0, 0.5, 2.0);
  const auto pairs = NoisyPairs(truth, 80, 0.02, 0.02, rng);
  JointProblem p;
  p.n_sensors = 2;
  p.metric = {true, false};
  p.initial = {Sim2(truth.x() + 0.2, truth.y() - 0.1, truth.theta() + 0.15, truth.scale() * 1.2)};
  p.blocks = {{0, 1, pairs}};
  const JointResult r = JointRefine(p);
  ASSERT_GE(r.cost_trace.size(), 2u);
  for (size_t k = 1; k < r.cost_trace.size(); ++k) {
    EXPECT_LE(r.cost_trace[k], r.cost_trace[k - 1]);
  }
  EXPECT_NEAR(r.cost_trace.back(), JointCost(p, r.params), 1e-15);
}

TEST(JointRefine, LargeLossScaleMatchesLeastSquares) {
  std::mt19937_64 rng(78);
  const Sim2 truth = RandomSim2(rng, 1.0, 0.5, 2.0);
  const auto pairs = NoisyPairs(truth, 80, 0.01, 0.01, rng);
  JointProblem p;
  p.n_sensors = 2;
  p.metric = {true, false};
  p.initial = {SolvePairwise(pairs).params};
  p.blocks = {{0, 1, pairs}};
  p.loss = RobustLoss::kTrivial;
  const JointResult ls = JointRefine(p);
  p.loss = RobustLoss::kCauchy;
  p.loss_scale = 1e6;
  const JointResult cauchy = JointRefine(p);
  EXPECT_LT(Sim2MaxError(ls.params[0], cauchy.params[0]), 1e-8);
}

TEST(JointRefine, ThreeSensorLoopConsistency) {
  std::mt19937_64 rng(79);
  const Sim2 x01 = RandomSim2(rng, 1.0, 1.0, 1.0);  // metric
  const Sim2 x02 = RandomSim2(rng, 1.0, 0.5, 2.0);
  const auto p01 = ExactPairs(x01, 40, rng);
  const auto p02 = ExactPairs(x02, 40, rng);
  const auto p12 = CrossPairs(x01, x02, 40, rng);
  JointProblem p;
  p.n_sensors = 3;
  p.metric = {true, true, false};
  p.initial = {SolvePairwise(p01).params, SolvePairwise(p02).params};
  p.blocks = {{0, 1, p01}, {0, 2, p02}, {1, 2, p12}};
  const JointResult r = JointRefine(p);
  const Sim2 direct = SolvePairwise(p12).params;
  EXPECT_LT(Sim2MaxError(RelativeCalibration(r.params[0], r.params[1]), direct), 1e-8);
  const double before = CalibrationDistance(RelativeCalibration(p.initial[0], p.initial[1]), direct);
  const double after = CalibrationDistance(RelativeCalibration(r.params[0], r.params[1]), direct);
  EXPECT_LE(after, before + 1e-12);
}

TEST(JointRefine, CrossConstraintsImproveNoisyLoop) {
  std::mt19937_64 rng(80);
  const Sim2 x01(0.3, 0.1, 0.5, 1.0);
  const Sim2 x02(-0.2, 0.4, -0.8, 1.5);
  const auto p01 = NoisyPairs(x01, 60, 0.003, 0.003, rng);
  const auto p02 = NoisyPairs(x02, 60, 0.003, 0.003, rng);
  const auto p12 = CrossPairs(x01, x02, 60, rng);
  JointProblem p;
  p.n_sensors = 3;
  p.metric = {true, true, false};
  p.initial = {SolvePairwise(p01).params, SolvePairwise(p02).params};
  p.blocks = {{0, 1, p01}, {0, 2, p02}, {1, 2, p12}};
  p.loss_scale = 0.05;
  const JointResult r = JointRefine(p);
  const Sim2 direct = SolvePairwise(p12).params;
  EXPECT_LE(CalibrationDistance(RelativeCalibration(r.params[0], r.params[1]), direct),
            CalibrationDistance(RelativeCalibration(p.initial[0], p.initial[1]), direct));
}

TEST(Retract, KeepsScalePositive) {
  const Sim2 x(0, 0, 0, 1e-3);
  EXPECT_GT(Retract(x, Eigen::Vector4d(0, 0, 0, -50)).scale(), 0.0);
}

}  // namespace
}  // namespace autocalib
