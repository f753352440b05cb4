#include "autocalib/ground_align.h"

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "autocalib/error.h"
#include "test_util.h"

namespace autocalib {
namespace {

using testing::GroundOracle;
using testing::kPi;
using testing::MountRotation;
using testing::PlanePoints;
using testing::WeightedCost;
using testing::WrappedDiff;

constexpr double kDeg = kPi / 180.0;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const CalibError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no CalibError thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(SolveGroundAlignment, LevelSensor) {
  std::vector<WeightedPoint3> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) pts.push_back({Eigen::Vector3d(i - 2.0, j * 0.5, -1.5), 1.0});
  const GroundSolution sol = SolveGroundAlignment(pts);
  EXPECT_NEAR(sol.alignment.z(), 1.5, 1e-12);
  EXPECT_NEAR(sol.alignment.alpha(), 0.0, 1e-12);
  EXPECT_NEAR(sol.alignment.beta(), 0.0, 1e-12);
  EXPECT_NEAR(sol.rms_residual, 0.0, 1e-12);
}

TEST(SolveGroundAlignment, NoiseFreeRecovery) {
  std::mt19937_64 rng(51);
  const std::vector<WeightedPoint3> pts = PlanePoints(1.2, 10 * kDeg, 5 * kDeg, 20, 20, 0.0, rng);
  const GroundSolution sol = SolveGroundAlignment(pts);
  EXPECT_NEAR(sol.alignment.z(), 1.2, 1e-8);
  EXPECT_NEAR(WrappedDiff(sol.alignment.alpha(), 10 * kDeg), 0.0, 1e-8);
  EXPECT_NEAR(WrappedDiff(sol.alignment.beta(), 5 * kDeg), 0.0, 1e-8);
  EXPECT_NEAR(sol.phi.tail<3>().norm(), 1.0, 1e-9);
  EXPECT_GT(sol.alignment.z(), 0.0);
}

TEST(SolveGroundAlignment, RandomNoiseFreeRecovery) {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  std::uniform_real_distribution<double> b(-1.4, 1.4);
  std::uniform_real_distribution<double> z(0.2, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double zz = z(rng), aa = a(rng), bb = b(rng);
    const GroundSolution sol = SolveGroundAlignment(PlanePoints(zz, aa, bb, 8, 8, 0.0, rng));
    EXPECT_NEAR(sol.alignment.z(), zz, 1e-8);
    EXPECT_NEAR(WrappedDiff(sol.alignment.alpha(), aa), 0.0, 1e-8);
    EXPECT_NEAR(WrappedDiff(sol.alignment.beta(), bb), 0.0, 1e-8);
  }
}

TEST(SolveGroundAlignment, DenseNoisyWithinCovarianceBound) {
  std::mt19937_64 rng(53);
  const double sigma = 0.01, z = 1.2, alpha = 10 * kDeg, beta = 5 * kDeg;
  const std::vector<WeightedPoint3> pts = PlanePoints(z, alpha, beta, 320, 240, sigma, rng);
  ASSERT_EQ(pts.size(), 76800u);
  const GroundSolution sol = SolveGroundAlignment(pts);
  // Linearized covariance sigma^2 (J^T J)^-1 of (z, alpha, beta) at the truth.
  const double eps = 1e-6;
  Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
  const Eigen::RowVector3d r0 = MountRotation(alpha, beta).row(2);
  const Eigen::RowVector3d da = (MountRotation(alpha + eps, beta).row(2) - r0) / eps;
  const Eigen::RowVector3d db = (MountRotation(alpha, beta + eps).row(2) - r0) / eps;
  for (const WeightedPoint3& p : pts) {
    const Eigen::Vector3d j(1.0, da.dot(p.m.transpose()), db.dot(p.m.transpose()));
    jtj += j * j.transpose();
  }
  const Eigen::Matrix3d cov = sigma * sigma * jtj.inverse();
  EXPECT_LT(std::abs(sol.alignment.z() - z), 3 * std::sqrt(cov(0, 0)));
  EXPECT_LT(std::abs(WrappedDiff(sol.alignment.alpha(), alpha)), 3 * std::sqrt(cov(1, 1)));
  EXPECT_LT(std::abs(WrappedDiff(sol.alignment.beta(), beta)), 3 * std::sqrt(cov(2, 2)));
  // The bound is of order sigma / sqrt(N).
  EXPECT_LT(std::sqrt(cov(0, 0)), 10 * sigma / std::sqrt(76800.0));
}

TEST(SolveGroundAlignment, GlobalOptimalityAgainstOracle) {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  std::uniform_real_distribution<double> b(-1.2, 1.2);
  std::uniform_real_distribution<double> z(0.3, 2.0);
  std::uniform_real_distribution<double> w(0.2, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<WeightedPoint3> pts = PlanePoints(z(rng), a(rng), b(rng), 10, 10, 0.01, rng);
    for (WeightedPoint3& p : pts) p.w = w(rng);
    const GroundSolution sol = SolveGroundAlignment(pts);
    const double cost = WeightedCost(pts, sol.alignment.z(), sol.alignment.alpha(),
                                     sol.alignment.beta());
    EXPECT_LE(cost, GroundOracle(pts) + 1e-6);
  }
}

TEST(SolveGroundAlignment, WeightScalingInvariance) {
  std::mt19937_64 rng(55);
  std::vector<WeightedPoint3> pts = PlanePoints(0.9, 0.3, -0.2, 12, 12, 0.02, rng);
  std::uniform_real_distribution<double> w(0.5, 1.5);
  for (WeightedPoint3& p : pts) p.w = w(rng);
  const GroundSolution a = SolveGroundAlignment(pts);
  for (WeightedPoint3& p : pts) p.w *= 37.5;
  const GroundSolution b = SolveGroundAlignment(pts);
  EXPECT_NEAR(a.alignment.z(), b.alignment.z(), 1e-12);
  EXPECT_NEAR(a.alignment.alpha(), b.alignment.alpha(), 1e-12);
  EXPECT_NEAR(a.alignment.beta(), b.alignment.beta(), 1e-12);
}

TEST(SolveGroundAlignment, RmsMatchesDefinition) {
  std::mt19937_64 rng(56);
  std::vector<WeightedPoint3> pts = PlanePoints(1.1, -0.4, 0.1, 10, 10, 0.03, rng);
  std::uniform_real_distribution<double> w(0.5, 1.5);
  for (WeightedPoint3& p : pts) p.w = w(rng);
  const GroundSolution sol = SolveGroundAlignment(pts);
  double num = 0.0, den = 0.0;
  for (const WeightedPoint3& p : pts) {
    const double eta = PlaneResidual(sol.alignment, p);
    num += p.w * eta * eta;
    den += p.w;
  }
  EXPECT_NEAR(sol.rms_residual, std::sqrt(num / den), 1e-12);
}

TEST(SolveGroundAlignment, Errors) {
  std::vector<WeightedPoint3> two = {{Eigen::Vector3d(0, 0, -1), 1}, {Eigen::Vector3d(1, 0, -1), 1}};
  EXPECT_EQ(CodeOf([&] { SolveGroundAlignment(two); }), ErrorCode::kInsufficientData);
  std::vector<WeightedPoint3> line;
  for (int i = 0; i < 10; ++i) line.push_back({Eigen::Vector3d(i, 2 * i, -1 - i), 1});
  EXPECT_EQ(CodeOf([&] { SolveGroundAlignment(line); }), ErrorCode::kDegenerate);
  // Every point lies on a plane through the sensor origin.
  std::vector<WeightedPoint3> through;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) through.push_back({Eigen::Vector3d(i, j, 0), 1});
  EXPECT_EQ(CodeOf([&] { SolveGroundAlignment(through); }), ErrorCode::kOrientation);
}

TEST(PlaneResidual, Examples) {
  EXPECT_NEAR(PlaneResidual(GroundAlignment(1, 0, 0), {Eigen::Vector3d(0, 0, -1), 1}), 0.0, 0.0);
  EXPECT_NEAR(PlaneResidual(GroundAlignment(1, 0, 0), {Eigen::Vector3d::Zero(), 1}), 1.0, 0.0);
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const GroundAlignment g(u(rng) + 2.5, u(rng), u(rng));
    const Eigen::Vector3d m(u(rng), u(rng), u(rng));
    EXPECT_NEAR(PlaneResidual(g, {m, 1}), (ToPose3(g) * m).z(), 1e-12);
  }
}

TEST(ProjectMotionToPlane, Examples) {
  const Pose3 planar(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()).toRotationMatrix(),
                     Eigen::Vector3d(0.3, -0.2, 0.0));
  const Pose2 p = ProjectMotionToPlane(GroundAlignment(1, 0, 0), planar);
  EXPECT_NEAR(p.x(), 0.3, 1e-15);
  EXPECT_NEAR(p.y(), -0.2, 1e-15);
  EXPECT_NEAR(p.theta(), 0.4, 1e-15);

  const Pose3 up(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 1));
  const Pose2 q = ProjectMotionToPlane(GroundAlignment(1, 0, kPi / 2), up);
  EXPECT_NEAR(q.translation().norm(), 1.0, 1e-15);
}

TEST(ProjectMotionToPlane, IndependentOfHeight) {
  std::mt19937_64 rng(58);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    const Eigen::Matrix3d mount = MountRotation(a, b);
    // A physically planar ground motion seen from the tilted sensor.
    const Pose3 ground(Eigen::AngleAxisd(u(rng), Eigen::Vector3d::UnitZ()).toRotationMatrix(),
                       Eigen::Vector3d(u(rng), u(rng), 0));
    const Pose3 sensor(mount.transpose() * ground.rotation * mount,
                       mount.transpose() * ground.translation);
    const Pose2 p1 = ProjectMotionToPlane(GroundAlignment(0.5, a, b), sensor);
    const Pose2 p2 = ProjectMotionToPlane(GroundAlignment(3.0, a, b), sensor);
    EXPECT_EQ(p1, p2);
  }
}

TEST(ProjectTrajectory, PlanarAndTiltedRoundTrip) {
  std::mt19937_64 rng(59);
  std::vector<TimedPose3> flat, tilted;
  std::vector<Pose2> truth;
  Pose2 pose;
  const double a = 0.35, b = -0.15;
  const Eigen::Matrix3d mount = MountRotation(a, b);
  for (int k = 0; k < 50; ++k) {
    truth.push_back(pose);
    const Pose3 p3(Eigen::AngleAxisd(pose.theta(), Eigen::Vector3d::UnitZ()).toRotationMatrix(),
                   Eigen::Vector3d(pose.x(), pose.y(), 0));
    flat.push_back({0.1 * k, p3});
    const Pose3 mounted(mount, Eigen::Vector3d(0, 0, 0.7));
    tilted.push_back({0.1 * k, p3 * mounted});
    pose = Compose(pose, testing::RandomMotion(rng, 0.3, 0.0, 0.4));
  }
  const Trajectory2 f = ProjectTrajectory(GroundAlignment(1, 0, 0), flat);
  const Trajectory2 t = ProjectTrajectory(GroundAlignment(0.7, a, b), tilted);
  for (size_t k = 0; k < truth.size(); ++k) {
    const Pose2 expected = IncrementalMotion(truth[0], truth[k]);
    EXPECT_NEAR(f[k].pose.x(), expected.x(), 1e-9);
    EXPECT_NEAR(f[k].pose.y(), expected.y(), 1e-9);
    EXPECT_NEAR(WrappedDiff(f[k].pose.theta(), expected.theta()), 0.0, 1e-9);
    EXPECT_NEAR(t[k].pose.x(), expected.x(), 1e-9);
    EXPECT_NEAR(t[k].pose.y(), expected.y(), 1e-9);
    EXPECT_NEAR(WrappedDiff(t[k].pose.theta(), expected.theta()), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(t[k].t, 0.1 * k);
  }
}

TEST(ProjectTrajectory, VerticalOscillationProjectsToRest) {
  std::vector<TimedPose3> traj;
  for (int k = 0; k < 20; ++k) {
    traj.push_back({static_cast<double>(k),
                    Pose3(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, std::sin(0.7 * k)))});
  }
  const Trajectory2 p = ProjectTrajectory(GroundAlignment(1, 0, 0), traj);
  for (const TimedPose2& s : p.samples()) EXPECT_EQ(s.pose, Pose2());
}

}  // namespace
}  // namespace autocalib
