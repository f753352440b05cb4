#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "autocalib/geometry.h"
#include "autocalib/sync.h"

namespace autocalib {

inline constexpr double kGroundRankTolerance = 1e-8;

// Ground observation in the sensor frame with a positive weight.
struct WeightedPoint3 {
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  double w = 1.0;
};

struct GroundSolution {
  GroundAlignment alignment;
  // sqrt(sum w eta^2 / sum w) over the input points.
  double rms_residual = 0.0;
  Eigen::Vector4d phi = Eigen::Vector4d::Zero();
  double kernel_margin = 0.0;
};

// Sum of w * [1 m]^T [1 m]; throws kInvalidArgument on a non-positive weight
// or non-finite point.
Eigen::Matrix4d BuildGroundQuadraticForm(std::span<const WeightedPoint3> points);

// Closed-form weighted least-squares estimate of the sensor height and tilt
// from points on the z = 0 ground plane. Throws kInsufficientData (< 3
// points), kDegenerate (collinear points) or kOrientation (plane through the
// sensor origin).
GroundSolution SolveGroundAlignment(std::span<const WeightedPoint3> points);

// Signed height of the point above the plane: HeightRow() * m + z.
double PlaneResidual(const GroundAlignment& g, const WeightedPoint3& p);

// Rotates a sensor-frame 3D motion into the ground frame and keeps its planar
// part: (t_x, t_y) of R t and the yaw of R R_k R^T.
Pose2 ProjectMotionToPlane(const GroundAlignment& g, const Pose3& motion);

struct TimedPose3 {
  double t = 0.0;
  Pose3 pose;
};

// Projects every incremental motion of a 3D trajectory and re-integrates the
// result from the identity, keeping the time stamps.
Trajectory2 ProjectTrajectory(const GroundAlignment& g, std::span<const TimedPose3> traj);

}  // namespace autocalib
