#include "autocalib/joint_opt.h"

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Cholesky>

#include "autocalib/error.h"

namespace autocalib {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

Eigen::Vector2d ToVec(Complex z) { return {z.real(), z.imag()}; }

// A similarity acting as m -> z * m + c on complex planar points.
struct AffineForm {
  Complex z;
  Complex c;
  double s;
};

AffineForm ToAffine(const Sim2& x) {
  return {std::polar(x.scale(), x.theta()), x.scale() * Complex(x.x(), x.y()), x.scale()};
}

double Rho(double sq, double c2, RobustLoss loss) {
  switch (loss) {
    case RobustLoss::kTrivial:
      return sq;
    default:
      return c2 * std::log1p(sq / c2);
  }
}

double RhoPrime(double sq, double c2, RobustLoss loss) {
  return loss == RobustLoss::kTrivial ? 1.0 : 1.0 / (1.0 + sq / c2);
}

double BlockCost(const Eigen::Vector2d& r, double c2, RobustLoss loss) {
  if (loss == RobustLoss::kCauchyPerComponent) {
    return Rho(r(0) * r(0), c2, loss) + Rho(r(1) * r(1), c2, loss);
  }
  return Rho(r.squaredNorm(), c2, loss);
}

const Sim2& SensorParams(std::span<const Sim2> params, int sensor, const Sim2& identity) {
  return sensor == 0 ? identity : params[static_cast<size_t>(sensor - 1)];
}

}  // namespace

void JointProblem::Validate() const {
  if (n_sensors < 2) {
    Fail(ErrorCode::kInvalidArgument, "joint problem needs at least two sensors");
  }
  if (initial.size() != static_cast<size_t>(n_sensors - 1)) {
    Fail(ErrorCode::kInvalidArgument, "one initial calibration per non-reference sensor");
  }
  if (!metric.empty() && metric.size() != static_cast<size_t>(n_sensors)) {
    Fail(ErrorCode::kInvalidArgument, "metric flags must cover every sensor");
  }
  if (!(loss_scale > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "loss scale must be positive");
  }
  for (const ObservationBlock& b : blocks) {
    if (b.i < 0 || b.j < 0 || b.i >= n_sensors || b.j >= n_sensors || b.i == b.j) {
      Fail(ErrorCode::kInvalidArgument, "observation block has invalid sensor indices");
    }
    if (b.pairs.empty()) {
      Fail(ErrorCode::kInvalidArgument, "observation block is empty");
    }
    if (b.i != 0 && !metric.empty() && !metric[static_cast<size_t>(b.i)]) {
      Fail(ErrorCode::kInvalidArgument,
           "extra constraint (" + std::to_string(b.i) + ", " + std::to_string(b.j) +
               ") must start at a metric sensor");
    }
  }
}

Sim2 RelativeCalibration(const Sim2& x0i, const Sim2& x0j) {
  return Compose(Inverse(x0i), x0j);
}

double RecoverMetricZ(const GroundAlignment& g, double scale) { return scale * g.z(); }

ResidualJacobian EvaluateResidual(const Sim2& x0i, const Sim2& x0j, const MotionPair& pair) {
  const AffineForm a = ToAffine(x0i);
  const AffineForm b = ToAffine(x0j);
  // Relative calibration A^-1 o B.
  const Complex z = b.z / a.z;
  const Complex c = (b.c - a.c) / a.z;
  const Complex r = std::polar(1.0, pair.p_j.theta());
  const Complex tau_j(pair.p_j.x(), pair.p_j.y());
  const Complex tau_i(pair.p_i.x(), pair.p_i.y());
  const Complex one_minus_r = 1.0 - r;

  // Predicted reference translation (X o P_j o X^-1)(0) = (1 - r) c + z tau_j.
  const Complex predicted = one_minus_r * c + z * tau_j;

  ResidualJacobian out;
  out.residual = ToVec(tau_i - predicted);

  // d(predicted) / d(x, y, theta, log s) of the second calibration.
  const Complex d2[4] = {one_minus_r * b.s / a.z, one_minus_r * kI * b.s / a.z,
                         kI * z * tau_j, one_minus_r * b.c / a.z + z * tau_j};
  // ... and of the first one.
  const Complex d1[4] = {-one_minus_r * a.s / a.z, -one_minus_r * kI * a.s / a.z,
                         -kI * predicted, -one_minus_r * b.c / a.z - z * tau_j};
  for (int k = 0; k < 4; ++k) {
    out.d_second.col(k) = -ToVec(d2[k]);
    out.d_first.col(k) = -ToVec(d1[k]);
  }
  return out;
}

double JointCost(const JointProblem& problem, std::span<const Sim2> params) {
  const double c2 = problem.loss_scale * problem.loss_scale;
  const Sim2 identity;
  double cost = 0.0;
  for (const ObservationBlock& block : problem.blocks) {
    const Sim2& xi = SensorParams(params, block.i, identity);
    const Sim2& xj = SensorParams(params, block.j, identity);
    for (const MotionPair& pair : block.pairs) {
      cost += BlockCost(EvaluateResidual(xi, xj, pair).residual, c2, problem.loss);
    }
  }
  return 0.5 * cost;
}

Sim2 Retract(const Sim2& x, const Eigen::Vector4d& delta) {
  return {x.x() + delta(0), x.y() + delta(1), x.theta() + delta(2),
          x.scale() * std::exp(delta(3))};
}

double CalibrationDistance(const Sim2& a, const Sim2& b) {
  const Eigen::Vector4d d(a.x() - b.x(), a.y() - b.y(), AngleDiff(a.theta(), b.theta()),
                          a.scale() - b.scale());
  return d.norm();
}

JointResult JointRefine(const JointProblem& problem, const JointOptions& options) {
  problem.Validate();
  const int n_params = 4 * (problem.n_sensors - 1);
  const double c2 = problem.loss_scale * problem.loss_scale;
  const Sim2 identity;

  JointResult result;
  result.params = problem.initial;
  double cost = JointCost(problem, result.params);
  result.cost_trace.push_back(cost);
  double damping = options.initial_damping;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_params, n_params);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params);
    for (const ObservationBlock& block : problem.blocks) {
      const Sim2& xi = SensorParams(result.params, block.i, identity);
      const Sim2& xj = SensorParams(result.params, block.j, identity);
      const int oi = 4 * (block.i - 1);
      const int oj = 4 * (block.j - 1);
      for (const MotionPair& pair : block.pairs) {
        const ResidualJacobian rj = EvaluateResidual(xi, xj, pair);
        Eigen::Matrix2d weight = Eigen::Matrix2d::Zero();
        if (problem.loss == RobustLoss::kCauchyPerComponent) {
          weight(0, 0) = RhoPrime(rj.residual(0) * rj.residual(0), c2, problem.loss);
          weight(1, 1) = RhoPrime(rj.residual(1) * rj.residual(1), c2, problem.loss);
        } else {
          weight.diagonal().setConstant(RhoPrime(rj.residual.squaredNorm(), c2, problem.loss));
        }
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, n_params);
        if (block.i != 0) {
          jac.middleCols<4>(oi) += rj.d_first;
        }
        if (block.j != 0) {
          jac.middleCols<4>(oj) += rj.d_second;
        }
        h.noalias() += jac.transpose() * weight * jac;
        g.noalias() += jac.transpose() * weight * rj.residual;
      }
    }

    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      result.termination = "gradient";
      break;
    }

    bool accepted = false;
    double trial_cost = std::numeric_limits<double>::infinity();
    std::vector<Sim2> trial;
    for (int step = 0; step < options.max_damping_steps; ++step) {
      Eigen::MatrixXd a = h;
      for (int k = 0; k < n_params; ++k) {
        a(k, k) += damping * std::max(h(k, k), 1e-12);
      }
      const Eigen::VectorXd delta = a.ldlt().solve(-g);
      trial.clear();
      for (int s = 0; s + 1 < problem.n_sensors; ++s) {
        trial.push_back(Retract(result.params[static_cast<size_t>(s)], delta.segment<4>(4 * s)));
      }
      trial_cost = JointCost(problem, trial);
      if (trial_cost < cost) {
        accepted = true;
        damping = std::max(damping / 10.0, 1e-15);
        break;
      }
      damping *= 10.0;
    }

    if (!accepted) {
      if (iter == 0 && cost > 0.0 && trial_cost > cost * (1.0 + 1e-12)) {
        Fail(ErrorCode::kConvergence, "no damped step reduced the joint cost");
      }
      result.termination = "no-progress";
      break;
    }
    const double decrease = (cost - trial_cost) / std::max(cost, 1e-300);
    result.params = std::move(trial);
    cost = trial_cost;
    result.cost_trace.push_back(cost);
    result.iterations = iter + 1;
    if (decrease < options.relative_cost_tolerance) {
      result.termination = "relative-cost";
      break;
    }
  }
  if (result.termination.empty()) {
    result.termination = "max-iterations";
  }
  return result;
}

}  // namespace autocalib
