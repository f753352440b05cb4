#include "autocalib/ground_align.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include "autocalib/error.h"
#include "autocalib/qcqp.h"

namespace autocalib {

namespace {
constexpr double kMinHeight = 1e-12;
}  // namespace

Eigen::Matrix4d BuildGroundQuadraticForm(std::span<const WeightedPoint3> points) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (const WeightedPoint3& p : points) {
    if (!(p.w > 0.0) || !std::isfinite(p.w) || !p.m.allFinite()) {
      Fail(ErrorCode::kInvalidArgument, "ground points need finite coordinates and w > 0");
    }
    Eigen::Vector4d q;
    q << 1.0, p.m;
    m.noalias() += p.w * q * q.transpose();
  }
  return m;
}

double PlaneResidual(const GroundAlignment& g, const WeightedPoint3& p) {
  return g.HeightRow().dot(p.m.transpose()) + g.z();
}

GroundSolution SolveGroundAlignment(std::span<const WeightedPoint3> points) {
  if (points.size() < 3) {
    Fail(ErrorCode::kInsufficientData, "ground alignment needs at least three points");
  }
  const Eigen::Matrix4d m = BuildGroundQuadraticForm(points);
  const QcqpResult qcqp = SolveUnitBlockQcqp(m, 1, kGroundRankTolerance);

  std::optional<QcqpCandidate> best;
  bool any_degenerate = false;
  for (const QcqpCandidate& cand : qcqp.candidates) {
    if (cand.degenerate) {
      any_degenerate = true;
      continue;
    }
    if (!(cand.phi(0) > kMinHeight)) {
      continue;
    }
    if (!best || cand.cost < best->cost) {
      best = cand;
    }
  }
  if (!best) {
    if (any_degenerate) {
      Fail(ErrorCode::kDegenerate,
           "ground points do not determine a unique plane (collinear or coincident)");
    }
    Fail(ErrorCode::kOrientation,
         "no candidate places the sensor strictly above the plane");
  }
  // A degenerate minimizer means the plane itself is ambiguous.
  for (const QcqpCandidate& cand : qcqp.candidates) {
    if (cand.degenerate && cand.cost <= best->cost) {
      Fail(ErrorCode::kDegenerate,
           "ground points do not determine a unique plane (collinear or coincident)");
    }
  }

  GroundSolution sol;
  sol.phi = best->phi;
  sol.kernel_margin = best->kernel_margin;
  const double beta = -std::asin(std::clamp(sol.phi(1), -1.0, 1.0));
  const double alpha = std::atan2(sol.phi(2), sol.phi(3));
  sol.alignment = GroundAlignment(sol.phi(0), alpha, beta);

  double weighted = 0.0;
  double total = 0.0;
  for (const WeightedPoint3& p : points) {
    const double eta = PlaneResidual(sol.alignment, p);
    weighted += p.w * eta * eta;
    total += p.w;
  }
  sol.rms_residual = std::sqrt(weighted / total);
  return sol;
}

Pose2 ProjectMotionToPlane(const GroundAlignment& g, const Pose3& motion) {
  const Eigen::Matrix3d r = ToPose3(g).rotation;
  const Eigen::Matrix3d rot = r * motion.rotation * r.transpose();
  const Eigen::Vector3d t = r * motion.translation;
  return {t.x(), t.y(), std::atan2(rot(1, 0), rot(0, 0))};
}

Trajectory2 ProjectTrajectory(const GroundAlignment& g, std::span<const TimedPose3> traj) {
  if (traj.size() < 2) {
    Fail(ErrorCode::kInsufficientData, "trajectory projection needs at least two poses");
  }
  std::vector<TimedPose2> out;
  out.reserve(traj.size());
  out.push_back({traj[0].t, Pose2::Identity()});
  for (size_t i = 1; i < traj.size(); ++i) {
    const Pose3 motion = traj[i - 1].pose.Inverse() * traj[i].pose;
    out.push_back({traj[i].t, Compose(out.back().pose, ProjectMotionToPlane(g, motion))});
  }
  return Trajectory2(std::move(out));
}

}  // namespace autocalib
