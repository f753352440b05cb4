#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace autocalib {

// Wraps an angle into the half-open interval [-pi, pi). Throws kInvalidArgument
// on non-finite input.
double NormalizeAngle(double theta);

// Signed smallest difference a - b, wrapped into [-pi, pi).
double AngleDiff(double a, double b);

// Planar orientation-preserving similarity (x, y, theta, s). Acting on a point
// m of the source frame it yields s * (R(theta) * m + [x, y]), so (x, y) are in
// source-frame units and s converts source units into target units.
class Sim2 {
 public:
  Sim2() = default;
  Sim2(double x, double y, double theta, double scale);

  static Sim2 Identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }
  double scale() const { return scale_; }
  Eigen::Vector2d translation() const { return {x_, y_}; }

  bool operator==(const Sim2&) const = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
  double scale_ = 1.0;
};

// Rigid planar pose, i.e. a Sim2 with unit scale.
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double theta);

  // Throws kInvalidArgument unless sim.scale() == 1 exactly.
  explicit Pose2(const Sim2& sim);

  static Pose2 Identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }
  Eigen::Vector2d translation() const { return {x_, y_}; }

  Sim2 ToSim2() const { return Sim2(x_, y_, theta_, 1.0); }

  bool operator==(const Pose2&) const = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
};

// Rigid part of a similarity (translation and angle kept verbatim).
Pose2 DropScale(const Sim2& sim);

Sim2 Compose(const Sim2& a, const Sim2& b);
Sim2 Inverse(const Sim2& a);
Eigen::Vector2d Apply(const Sim2& x, const Eigen::Vector2d& m);

// Unit-scale overloads; the result scale stays exactly 1.
Pose2 Compose(const Pose2& a, const Pose2& b);
Pose2 Inverse(const Pose2& a);

Eigen::Matrix2d Rotation2(double theta);

struct Pose3 {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose3() = default;
  Pose3(const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
      : rotation(r), translation(t) {}

  Pose3 Inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  Pose3 operator*(const Pose3& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  // Max deviation of R^T R from identity and of det(R) from one.
  double OrthonormalityError() const;
};

Eigen::Matrix3d RotationX(double angle);
Eigen::Matrix3d RotationY(double angle);
Eigen::Matrix3d RotationZ(double angle);

// Height and tilt of a sensor relative to the ground plane. The rotation is
// R_y(beta) * R_x(alpha) and the translation (0, 0, z); the in-plane yaw is
// fixed to zero, it is recovered later by the planar calibration.
class GroundAlignment {
 public:
  GroundAlignment() = default;
  GroundAlignment(double z, double alpha, double beta);

  double z() const { return z_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  // Third row of the rotation; dotting it with a sensor point and adding z
  // gives the point's height above the plane.
  Eigen::RowVector3d HeightRow() const;

  bool operator==(const GroundAlignment&) const = default;

 private:
  double z_ = 1.0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

Pose3 ToPose3(const GroundAlignment& g);

}  // namespace autocalib
