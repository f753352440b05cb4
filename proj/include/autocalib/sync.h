#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "autocalib/geometry.h"

namespace autocalib {

struct TimedPose2 {
  double t = 0.0;
  Pose2 pose;
};

// Planar trajectory with strictly increasing, finite timestamps.
class Trajectory2 {
 public:
  Trajectory2() = default;
  explicit Trajectory2(std::vector<TimedPose2> samples);

  const std::vector<TimedPose2>& samples() const { return samples_; }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TimedPose2& operator[](size_t i) const { return samples_[i]; }
  double start_time() const { return samples_.front().t; }
  double end_time() const { return samples_.back().t; }

  // Mean sampling rate in Hz; zero for fewer than two samples.
  double MeanRate() const;

 private:
  std::vector<TimedPose2> samples_;
};

// Synchronous incremental motions of two sensors over [t0, t1]. p_i belongs
// to the reference sensor, p_j to the sensor being calibrated.
struct MotionPair {
  Pose2 p_i;
  Pose2 p_j;
  size_t k = 0;
  double t0 = 0.0;
  double t1 = 0.0;
};

// Relative motion from pose q_k to pose q_k1, i.e. (-q_k) + q_k1.
Pose2 IncrementalMotion(const Pose2& q_k, const Pose2& q_k1);

// Incremental motions between consecutive samples.
std::vector<Pose2> IncrementalMotions(const Trajectory2& traj);

// Chains motions starting from `start`; the inverse of IncrementalMotions.
std::vector<Pose2> IntegrateMotions(const Pose2& start, std::span<const Pose2> motions);

// Linear interpolation of x, y and shortest-arc interpolation of theta.
// Sample times are reproduced exactly. Throws kRange outside the trajectory.
Pose2 InterpolatePose(const Trajectory2& traj, double t);

struct ResampleOptions {
  // Intervals whose bracketing samples (in either interpolated trajectory)
  // are further apart than this are dropped as missing data.
  double max_gap = std::numeric_limits<double>::infinity();
};

struct SynchronizedMotions {
  std::vector<MotionPair> pairs;
  size_t dropped_intervals = 0;
};

// Builds motion pairs on the given time base. Time stamps outside the common
// overlap of `ref` and `other` are discarded, never extrapolated. Throws
// kInsufficientData when fewer than two usable time stamps remain.
SynchronizedMotions ResampleOnTimes(std::span<const double> times,
                                    const Trajectory2& ref, const Trajectory2& other,
                                    const ResampleOptions& options = {});

// Time base = the reference sensor's own sample times.
SynchronizedMotions ResampleSynchronous(const Trajectory2& ref, const Trajectory2& other,
                                        const ResampleOptions& options = {});

std::vector<double> Timestamps(const Trajectory2& traj);

}  // namespace autocalib
