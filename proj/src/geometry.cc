#include "autocalib/geometry.h"

#include <cmath>
#include <numbers>

#include "autocalib/error.h"

namespace autocalib {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double NormalizeAngle(double theta) {
  if (!std::isfinite(theta)) {
    Fail(ErrorCode::kInvalidArgument, "angle is not finite");
  }
  if (theta >= -kPi && theta < kPi) {
    return theta;
  }
  double wrapped = std::fmod(theta + kPi, kTwoPi);
  if (wrapped < 0.0) {
    wrapped += kTwoPi;
  }
  wrapped -= kPi;
  // fmod is exact but the shifts are not; clamp the half-open boundary.
  if (wrapped >= kPi) {
    wrapped -= kTwoPi;
  }
  if (wrapped < -kPi) {
    wrapped = -kPi;
  }
  return wrapped;
}

double AngleDiff(double a, double b) { return NormalizeAngle(a - b); }

Sim2::Sim2(double x, double y, double theta, double scale)
    : x_(x), y_(y), theta_(NormalizeAngle(theta)), scale_(scale) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    Fail(ErrorCode::kInvalidArgument, "Sim2 translation is not finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    Fail(ErrorCode::kInvalidArgument, "Sim2 scale must be positive and finite");
  }
}

Pose2::Pose2(double x, double y, double theta)
    : x_(x), y_(y), theta_(NormalizeAngle(theta)) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    Fail(ErrorCode::kInvalidArgument, "Pose2 translation is not finite");
  }
}

Pose2::Pose2(const Sim2& sim) : x_(sim.x()), y_(sim.y()), theta_(sim.theta()) {
  if (sim.scale() != 1.0) {
    Fail(ErrorCode::kInvalidArgument, "Pose2 requires a unit-scale similarity");
  }
}

Pose2 DropScale(const Sim2& sim) { return {sim.x(), sim.y(), sim.theta()}; }

Sim2 Compose(const Sim2& a, const Sim2& b) {
  const double c = std::cos(a.theta());
  const double s = std::sin(a.theta());
  return {a.x() / b.scale() + b.x() * c - b.y() * s,
          a.y() / b.scale() + b.x() * s + b.y() * c, a.theta() + b.theta(),
          a.scale() * b.scale()};
}

Sim2 Inverse(const Sim2& a) {
  const double c = std::cos(a.theta());
  const double s = std::sin(a.theta());
  return {-a.scale() * (a.x() * c + a.y() * s),
          a.scale() * (a.x() * s - a.y() * c), -a.theta(), 1.0 / a.scale()};
}

Eigen::Vector2d Apply(const Sim2& x, const Eigen::Vector2d& m) {
  return x.scale() * (Rotation2(x.theta()) * m + x.translation());
}

Pose2 Compose(const Pose2& a, const Pose2& b) {
  return DropScale(Compose(a.ToSim2(), b.ToSim2()));
}

Pose2 Inverse(const Pose2& a) { return DropScale(Inverse(a.ToSim2())); }

Eigen::Matrix2d Rotation2(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

double Pose3::OrthonormalityError() const {
  const double ortho =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  return std::max(ortho, std::abs(rotation.determinant() - 1.0));
}

Eigen::Matrix3d RotationX(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

Eigen::Matrix3d RotationY(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Eigen::Matrix3d RotationZ(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

GroundAlignment::GroundAlignment(double z, double alpha, double beta)
    : z_(z), alpha_(NormalizeAngle(alpha)), beta_(NormalizeAngle(beta)) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    Fail(ErrorCode::kInvalidArgument, "ground height must be positive");
  }
}

Eigen::RowVector3d GroundAlignment::HeightRow() const {
  const double cb = std::cos(beta_);
  return {-std::sin(beta_), cb * std::sin(alpha_), cb * std::cos(alpha_)};
}

Pose3 ToPose3(const GroundAlignment& g) {
  return {RotationY(g.beta()) * RotationX(g.alpha()), Eigen::Vector3d(0.0, 0.0, g.z())};
}

}  // namespace autocalib
