#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "autocalib/geometry.h"
#include "autocalib/sync.h"

namespace autocalib {

enum class RobustLoss {
  kCauchy,              // rho(||r||^2)
  kCauchyPerComponent,  // sum_c rho(r_c^2), the literal reading of rho inside the norm
  kTrivial,             // plain least squares
};

// Motion pairs between sensor i (the p_i side) and sensor j. Blocks with
// i == 0 tie a sensor to the reference; the others are extra constraints.
struct ObservationBlock {
  int i = 0;
  int j = 1;
  std::vector<MotionPair> pairs;
};

struct JointProblem {
  int n_sensors = 2;
  // Per sensor; the first sensor of every cross block must be metric.
  std::vector<bool> metric;
  std::vector<ObservationBlock> blocks;
  // Calibrations of sensors 1..n-1 relative to sensor 0.
  std::vector<Sim2> initial;
  double loss_scale = 0.05;
  RobustLoss loss = RobustLoss::kCauchy;

  // Throws kInvalidArgument when the invariants above do not hold.
  void Validate() const;
};

struct JointOptions {
  int max_iterations = 200;
  double relative_cost_tolerance = 1e-10;
  double gradient_tolerance = 1e-10;
  double initial_damping = 1e-4;
  int max_damping_steps = 30;
};

struct JointResult {
  std::vector<Sim2> params;
  // Robust cost before the first and after every accepted step.
  std::vector<double> cost_trace;
  int iterations = 0;
  std::string termination;
};

// (-x0i) + x0j: the calibration of sensor j relative to sensor i.
Sim2 RelativeCalibration(const Sim2& x0i, const Sim2& x0j);

// Metric sensor height from a height measured in a scaled reconstruction.
double RecoverMetricZ(const GroundAlignment& g, double scale);

// Residual of one motion pair under the relative calibration (-x0i) + x0j and
// its derivatives with respect to (x, y, theta, log s) of x0i and of x0j.
struct ResidualJacobian {
  Eigen::Vector2d residual;
  Eigen::Matrix<double, 2, 4> d_first;
  Eigen::Matrix<double, 2, 4> d_second;
};
ResidualJacobian EvaluateResidual(const Sim2& x0i, const Sim2& x0j, const MotionPair& pair);

// 1/2 sum rho(.) over all blocks; params holds sensors 1..n-1.
double JointCost(const JointProblem& problem, std::span<const Sim2> params);

// Levenberg-Marquardt on the robust joint cost with iteratively reweighted
// normal equations. The cost trace never increases. Throws kConvergence if
// no damped first step lowers the cost.
JointResult JointRefine(const JointProblem& problem, const JointOptions& options = {});

// Distance between two calibrations over (x, y, wrapped theta, s).
double CalibrationDistance(const Sim2& a, const Sim2& b);

// Parameter-space update used by the solver: (x, y, theta) additive and the
// scale multiplied by exp(delta(3)).
Sim2 Retract(const Sim2& x, const Eigen::Vector4d& delta);

}  // namespace autocalib
