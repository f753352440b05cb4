#pragma once

#include <span>

#include <Eigen/Core>

#include "autocalib/geometry.h"
#include "autocalib/sync.h"

namespace autocalib {

// Relative singular-value threshold for the one-dimensional kernel check.
inline constexpr double kPlanarRankTolerance = 1e-8;

// Quadratic form over phi = [1/s, x, y, cos(theta), sin(theta)] whose minimum
// on cos^2 + sin^2 = 1 is the pairwise calibration.
struct PlanarQcqp {
  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 5> w = Eigen::Matrix<double, 5, 5>::Zero();
  size_t n_obs = 0;
};

// Two residual rows of one motion pair; the residual equals Q * phi.
Eigen::Matrix<double, 2, 5> MotionCoefficients(const MotionPair& pair);

// Throws kInsufficientData for fewer than two pairs.
PlanarQcqp BuildPlanarQcqp(std::span<const MotionPair> pairs);

struct PairwiseSolution {
  Sim2 params;
  Eigen::Matrix<double, 5, 1> phi;
  // phi^T M phi / 2: the pairwise cost without its calibration-independent
  // angle term.
  double residual_cost = 0.0;
  // sigma_{n-2} / sigma_max of M + lambda* W for the chosen root.
  double kernel_margin = 0.0;
  // Set when the kernel margin is within 100x of the rank tolerance.
  bool thin_margin = false;
};

// Closed-form least-squares calibration of the sensor producing p_j relative
// to the one producing p_i. Throws kInsufficientData (< 2 pairs), kDegenerate
// (kernel not one-dimensional, e.g. pure translation or pure rotation),
// kScaleSign (no candidate with positive 1/s) or kConditioning (no real
// multiplier).
PairwiseSolution SolvePairwise(std::span<const MotionPair> pairs);

// 1/2 sum_k || x + p_j^k - (p_i^k + x) ||^2 over (x, y, theta); the angle
// residual is wrapped and does not depend on x.
double PairwiseCost(const Sim2& x, std::span<const MotionPair> pairs);

// The x-independent part of PairwiseCost: 1/2 sum_k wrap(theta_j - theta_i)^2.
double PairwiseAngleCost(std::span<const MotionPair> pairs);

}  // namespace autocalib
