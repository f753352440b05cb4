#include "autocalib/planar_calib.h"

#include <cmath>
#include <optional>

#include "autocalib/error.h"
#include "autocalib/qcqp.h"

namespace autocalib {

namespace {
constexpr double kCostTie = 1e-12;
constexpr double kMinInverseScale = 1e-12;
}  // namespace

Eigen::Matrix<double, 2, 5> MotionCoefficients(const MotionPair& pair) {
  const Pose2& pi = pair.p_i;
  const Pose2& pj = pair.p_j;
  const double c = std::cos(pi.theta());
  const double s = std::sin(pi.theta());
  Eigen::Matrix<double, 2, 5> q;
  q << -pi.x(), 1.0 - c, s, pj.x(), -pj.y(),  //
      -pi.y(), -s, 1.0 - c, pj.y(), pj.x();
  return q;
}

PlanarQcqp BuildPlanarQcqp(std::span<const MotionPair> pairs) {
  if (pairs.size() < 2) {
    Fail(ErrorCode::kInsufficientData, "pairwise calibration needs at least two motion pairs");
  }
  PlanarQcqp sys;
  for (const MotionPair& pair : pairs) {
    const Eigen::Matrix<double, 2, 5> q = MotionCoefficients(pair);
    sys.m.noalias() += q.transpose() * q;
  }
  // Exact symmetry regardless of summation rounding.
  sys.m = 0.5 * (sys.m + sys.m.transpose()).eval();
  sys.w(3, 3) = 1.0;
  sys.w(4, 4) = 1.0;
  sys.n_obs = pairs.size();
  return sys;
}

PairwiseSolution SolvePairwise(std::span<const MotionPair> pairs) {
  const PlanarQcqp sys = BuildPlanarQcqp(pairs);
  const QcqpResult qcqp = SolveUnitBlockQcqp(sys.m, 3, kPlanarRankTolerance);

  for (const QcqpCandidate& cand : qcqp.candidates) {
    if (cand.degenerate) {
      Fail(ErrorCode::kDegenerate,
           "M + lambda W does not have rank exactly 4 (kernel margin " +
               std::to_string(cand.kernel_margin) +
               "); the motions need at least two linearly independent rotations");
    }
  }

  std::optional<QcqpCandidate> best;
  for (const QcqpCandidate& cand : qcqp.candidates) {
    if (!(cand.phi(0) > kMinInverseScale)) {
      continue;
    }
    if (!best || cand.cost < best->cost - kCostTie ||
        (std::abs(cand.cost - best->cost) <= kCostTie && cand.phi(0) > best->phi(0))) {
      best = cand;
    }
  }
  if (!best) {
    Fail(ErrorCode::kScaleSign, "no candidate solution has a positive scale");
  }

  PairwiseSolution sol;
  sol.phi = best->phi;
  sol.params = Sim2(sol.phi(1), sol.phi(2), std::atan2(sol.phi(4), sol.phi(3)), 1.0 / sol.phi(0));
  sol.residual_cost = 0.5 * best->cost;
  sol.kernel_margin = best->kernel_margin;
  sol.thin_margin = best->kernel_margin < 100.0 * kPlanarRankTolerance;
  return sol;
}

double PairwiseCost(const Sim2& x, std::span<const MotionPair> pairs) {
  double cost = 0.0;
  for (const MotionPair& pair : pairs) {
    const Sim2 lhs = Compose(x, pair.p_j.ToSim2());
    const Sim2 rhs = Compose(pair.p_i.ToSim2(), x);
    const double ex = lhs.x() - rhs.x();
    const double ey = lhs.y() - rhs.y();
    const double et = AngleDiff(lhs.theta(), rhs.theta());
    cost += ex * ex + ey * ey + et * et;
  }
  return 0.5 * cost;
}

double PairwiseAngleCost(std::span<const MotionPair> pairs) {
  double cost = 0.0;
  for (const MotionPair& pair : pairs) {
    const double et = AngleDiff(pair.p_j.theta(), pair.p_i.theta());
    cost += et * et;
  }
  return 0.5 * cost;
}

}  // namespace autocalib
