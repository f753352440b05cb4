#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "autocalib/geometry.h"
#include "autocalib/ground_align.h"
#include "autocalib/sync.h"

namespace autocalib::testing {

constexpr double kPi = std::numbers::pi;

// Homogeneous 3x3 representation of m -> s (R m + t). Composition of
// similarities is matrix multiplication, which gives tests an oracle that does
// not share code with the closed-form group operators.
inline Eigen::Matrix3d ToMatrix(const Sim2& x) {
  const double c = std::cos(x.theta());
  const double s = std::sin(x.theta());
  Eigen::Matrix3d m;
  m << x.scale() * c, -x.scale() * s, x.scale() * x.x(),  //
      x.scale() * s, x.scale() * c, x.scale() * x.y(),    //
      0.0, 0.0, 1.0;
  return m;
}

inline Sim2 FromMatrix(const Eigen::Matrix3d& m) {
  const double scale = std::sqrt(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
  const double theta = std::atan2(m(1, 0), m(0, 0));
  return {m(0, 2) / scale, m(1, 2) / scale, theta, scale};
}

inline double WrappedDiff(double a, double b) {
  double d = std::fmod(a - b, 2.0 * kPi);
  if (d >= kPi) d -= 2.0 * kPi;
  if (d < -kPi) d += 2.0 * kPi;
  return d;
}

inline double Sim2MaxError(const Sim2& a, const Sim2& b) {
  return std::max({std::abs(a.x() - b.x()), std::abs(a.y() - b.y()),
                   std::abs(WrappedDiff(a.theta(), b.theta())),
                   std::abs(a.scale() - b.scale())});
}

inline Sim2 RandomSim2(std::mt19937_64& rng, double max_trans = 2.0, double min_scale = 0.2,
                       double max_scale = 5.0) {
  std::uniform_real_distribution<double> t(-max_trans, max_trans);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  std::uniform_real_distribution<double> ls(std::log(min_scale), std::log(max_scale));
  return {t(rng), t(rng), a(rng), std::exp(ls(rng))};
}

// Incremental motion with a rotation of at least min_rot in magnitude.
inline Pose2 RandomMotion(std::mt19937_64& rng, double max_trans = 1.0, double min_rot = 0.05,
                          double max_rot = 1.0) {
  std::uniform_real_distribution<double> t(-max_trans, max_trans);
  std::uniform_real_distribution<double> r(min_rot, max_rot);
  std::bernoulli_distribution sign(0.5);
  const double rot = sign(rng) ? r(rng) : -r(rng);
  return {t(rng), t(rng), rot};
}

// Forward model: the sensor motion is x^-1 p_i x in matrix form.
inline Pose2 SensorMotion(const Sim2& x, const Pose2& p_i) {
  const Eigen::Matrix3d mx = ToMatrix(x);
  const Sim2 p_j = FromMatrix(mx.inverse() * ToMatrix(p_i.ToSim2()) * mx);
  return {p_j.x(), p_j.y(), p_j.theta()};
}

inline std::vector<MotionPair> ExactPairs(const Sim2& x, size_t n, std::mt19937_64& rng) {
  std::vector<MotionPair> pairs;
  for (size_t k = 0; k < n; ++k) {
    const Pose2 p_i = RandomMotion(rng);
    pairs.push_back({p_i, SensorMotion(x, p_i), k, static_cast<double>(k),
                     static_cast<double>(k + 1)});
  }
  return pairs;
}

inline std::vector<MotionPair> NoisyPairs(const Sim2& x, size_t n, double sigma_t,
                                          double sigma_r, std::mt19937_64& rng) {
  std::vector<MotionPair> pairs = ExactPairs(x, n, rng);
  std::normal_distribution<double> nt(0.0, sigma_t);
  std::normal_distribution<double> nr(0.0, sigma_r);
  for (MotionPair& p : pairs) {
    p.p_i = Pose2(p.p_i.x() + nt(rng), p.p_i.y() + nt(rng), p.p_i.theta() + nr(rng));
    p.p_j = Pose2(p.p_j.x() + nt(rng), p.p_j.y() + nt(rng), p.p_j.theta() + nr(rng));
  }
  return pairs;
}

// Translation part of the residual x * p_j - p_i * x, written out directly:
// R(theta) t_j + (I - R_i) t - t_i / s.
inline Eigen::Vector2d PairTranslationResidual(double x, double y, double theta, double inv_s,
                                               const MotionPair& p) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double ci = std::cos(p.p_i.theta()), si = std::sin(p.p_i.theta());
  const Eigen::Vector2d tj(p.p_j.x(), p.p_j.y());
  const Eigen::Vector2d ti(p.p_i.x(), p.p_i.y());
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  Eigen::Matrix2d ri;
  ri << ci, -si, si, ci;
  return r * tj + (Eigen::Matrix2d::Identity() - ri) * Eigen::Vector2d(x, y) - ti * inv_s;
}

// Brute-force minimum of 1/2 sum ||translation residual||^2: a dense grid over
// theta, at each angle the exact linear least-squares fit of (1/s, x, y), then
// golden-section refinement around the best grid cell.
struct PlanarOracleResult {
  double cost = 0.0;
  double theta = 0.0;
  Eigen::Vector3d u = Eigen::Vector3d::Zero();  // (1/s, x, y)
};

inline PlanarOracleResult PlanarOracleAtAngle(const std::vector<MotionPair>& pairs,
                                              double theta) {
  Eigen::MatrixXd a(2 * pairs.size(), 3);
  Eigen::VectorXd b(2 * pairs.size());
  const double c = std::cos(theta), s = std::sin(theta);
  for (size_t k = 0; k < pairs.size(); ++k) {
    const MotionPair& p = pairs[k];
    const double ci = std::cos(p.p_i.theta()), si = std::sin(p.p_i.theta());
    a.row(2 * k) << -p.p_i.x(), 1.0 - ci, si;
    a.row(2 * k + 1) << -p.p_i.y(), -si, 1.0 - ci;
    b(2 * k) = -(c * p.p_j.x() - s * p.p_j.y());
    b(2 * k + 1) = -(s * p.p_j.x() + c * p.p_j.y());
  }
  PlanarOracleResult r;
  r.theta = theta;
  r.u = a.colPivHouseholderQr().solve(b);
  double cost = 0.0;
  for (const MotionPair& p : pairs) {
    cost += PairTranslationResidual(r.u(1), r.u(2), theta, r.u(0), p).squaredNorm();
  }
  r.cost = 0.5 * cost;
  return r;
}

inline PlanarOracleResult PlanarOracle(const std::vector<MotionPair>& pairs, int grid = 720) {
  PlanarOracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  const double step = 2.0 * kPi / grid;
  for (int i = 0; i < grid; ++i) {
    const PlanarOracleResult r = PlanarOracleAtAngle(pairs, -kPi + i * step);
    if (r.cost < best.cost) best = r;
  }
  double lo = best.theta - step, hi = best.theta + step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - g * (hi - lo);
    const double m2 = lo + g * (hi - lo);
    if (PlanarOracleAtAngle(pairs, m1).cost < PlanarOracleAtAngle(pairs, m2).cost) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const PlanarOracleResult r = PlanarOracleAtAngle(pairs, 0.5 * (lo + hi));
  return r.cost < best.cost ? r : best;
}

// Pairs between sensors a and b given their calibrations relative to the
// reference; the first motion of each pair belongs to sensor a.
inline std::vector<MotionPair> CrossPairs(const Sim2& x0a, const Sim2& x0b, size_t n,
                                          std::mt19937_64& rng) {
  const Sim2 rel = FromMatrix(ToMatrix(x0a).inverse() * ToMatrix(x0b));
  return ExactPairs(rel, n, rng);
}

// Corrupts the reference translation of `count` randomly chosen pairs by
// +-magnitude per axis and returns the corruption labels.
inline std::vector<bool> Corrupt(std::vector<MotionPair>& pairs, size_t count, double magnitude,
                                 std::mt19937_64& rng) {
  std::vector<size_t> idx(pairs.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::bernoulli_distribution sign(0.5);
  std::vector<bool> outlier(pairs.size(), false);
  for (size_t k = 0; k < count; ++k) {
    MotionPair& p = pairs[idx[k]];
    const double dx = sign(rng) ? magnitude : -magnitude;
    const double dy = sign(rng) ? magnitude : -magnitude;
    p.p_i = Pose2(p.p_i.x() + dx, p.p_i.y() + dy, p.p_i.theta());
    outlier[idx[k]] = true;
  }
  return outlier;
}

inline Eigen::Matrix3d MountRotation(double alpha, double beta) {
  return (Eigen::AngleAxisd(beta, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

// Points of the z = 0 plane seen from a sensor at height z with tilt (alpha,
// beta), expressed in the sensor frame; noise is added along the plane normal.
inline std::vector<WeightedPoint3> PlanePoints(double z, double alpha, double beta, int nx,
                                               int ny, double sigma, std::mt19937_64& rng) {
  const Eigen::Matrix3d r = MountRotation(alpha, beta);
  const Eigen::Vector3d t(0, 0, z);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<WeightedPoint3> pts;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const Eigen::Vector3d g(-2.0 + 4.0 * i / (nx - 1), -1.5 + 3.0 * j / (ny - 1),
                              sigma > 0 ? noise(rng) : 0.0);
      pts.push_back({r.transpose() * (g - t), 1.0});
    }
  }
  return pts;
}

inline double WeightedCost(const std::vector<WeightedPoint3>& pts, double z, double alpha,
                           double beta) {
  const Eigen::RowVector3d row = MountRotation(alpha, beta).row(2);
  double c = 0.0;
  for (const WeightedPoint3& p : pts) c += p.w * std::pow(row.dot(p.m.transpose()) + z, 2);
  return c;
}

// Weighted cost minimized over z for a fixed tilt.
inline double ProfileCost(const std::vector<WeightedPoint3>& pts, double alpha, double beta) {
  const Eigen::RowVector3d row = MountRotation(alpha, beta).row(2);
  double sw = 0.0, swh = 0.0;
  for (const WeightedPoint3& p : pts) {
    sw += p.w;
    swh += p.w * row.dot(p.m.transpose());
  }
  return WeightedCost(pts, -swh / sw, alpha, beta);
}

// Grid over (alpha, beta) with z profiled out, then compass-search refinement.
inline double GroundOracle(const std::vector<WeightedPoint3>& pts) {
  double best = 1e300, ba = 0, bb = 0;
  const int na = 180, nb = 90;
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j <= nb; ++j) {
      const double a = -kPi + 2 * kPi * i / na;
      const double b = -kPi / 2 + kPi * j / nb;
      const double c = ProfileCost(pts, a, b);
      if (c < best) best = c, ba = a, bb = b;
    }
  }
  double step = 2 * kPi / na;
  while (step > 1e-12) {
    bool moved = false;
    for (auto [da, db] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const double c = ProfileCost(pts, ba + da * step, bb + db * step);
      if (c < best) {
        best = c, ba += da * step, bb += db * step, moved = true;
        break;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

}  // namespace autocalib::testing
