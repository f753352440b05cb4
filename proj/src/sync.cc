#include "autocalib/sync.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "autocalib/error.h"

namespace autocalib {

Trajectory2::Trajectory2(std::vector<TimedPose2> samples) : samples_(std::move(samples)) {
  for (size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i].t)) {
      Fail(ErrorCode::kData, "timestamp " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(samples_[i].t > samples_[i - 1].t)) {
      Fail(ErrorCode::kData,
           "timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
    }
  }
}

double Trajectory2::MeanRate() const {
  if (samples_.size() < 2) {
    return 0.0;
  }
  return static_cast<double>(samples_.size() - 1) / (end_time() - start_time());
}

Pose2 IncrementalMotion(const Pose2& q_k, const Pose2& q_k1) {
  return Compose(Inverse(q_k), q_k1);
}

std::vector<Pose2> IncrementalMotions(const Trajectory2& traj) {
  std::vector<Pose2> motions;
  for (size_t i = 1; i < traj.size(); ++i) {
    motions.push_back(IncrementalMotion(traj[i - 1].pose, traj[i].pose));
  }
  return motions;
}

std::vector<Pose2> IntegrateMotions(const Pose2& start, std::span<const Pose2> motions) {
  std::vector<Pose2> poses{start};
  poses.reserve(motions.size() + 1);
  for (const Pose2& m : motions) {
    poses.push_back(Compose(poses.back(), m));
  }
  return poses;
}

namespace {

// Index i such that traj[i].t <= t <= traj[i+1].t.
size_t Bracket(const Trajectory2& traj, double t) {
  if (traj.size() < 2 || t < traj.start_time() || t > traj.end_time()) {
    Fail(ErrorCode::kRange, "time " + std::to_string(t) + " outside the trajectory");
  }
  const auto& s = traj.samples();
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double value, const TimedPose2& p) { return value < p.t; });
  size_t hi = static_cast<size_t>(it - s.begin());
  if (hi >= s.size()) {
    hi = s.size() - 1;
  }
  return hi - 1;
}

double BracketGap(const Trajectory2& traj, double t) {
  const size_t i = Bracket(traj, t);
  if (traj[i].t == t || traj[i + 1].t == t) {
    return 0.0;
  }
  return traj[i + 1].t - traj[i].t;
}

}  // namespace

Pose2 InterpolatePose(const Trajectory2& traj, double t) {
  if (traj.size() == 1 && t == traj.start_time()) {
    return traj[0].pose;
  }
  const size_t i = Bracket(traj, t);
  const TimedPose2& a = traj[i];
  const TimedPose2& b = traj[i + 1];
  if (t == a.t) {
    return a.pose;
  }
  if (t == b.t) {
    return b.pose;
  }
  const double u = (t - a.t) / (b.t - a.t);
  const double dtheta = AngleDiff(b.pose.theta(), a.pose.theta());
  return {a.pose.x() + u * (b.pose.x() - a.pose.x()),
          a.pose.y() + u * (b.pose.y() - a.pose.y()), a.pose.theta() + u * dtheta};
}

SynchronizedMotions ResampleOnTimes(std::span<const double> times, const Trajectory2& ref,
                                    const Trajectory2& other,
                                    const ResampleOptions& options) {
  if (ref.size() < 2 || other.size() < 2) {
    Fail(ErrorCode::kInsufficientData, "trajectories need at least two samples");
  }
  const double begin = std::max(ref.start_time(), other.start_time());
  const double end = std::min(ref.end_time(), other.end_time());
  if (!(begin < end)) {
    Fail(ErrorCode::kInsufficientData, "trajectories do not overlap in time");
  }
  std::vector<double> usable;
  for (double t : times) {
    if (t >= begin && t <= end) {
      usable.push_back(t);
    }
  }
  if (usable.size() < 2) {
    Fail(ErrorCode::kInsufficientData,
         "fewer than two time-base samples inside the overlap");
  }

  SynchronizedMotions out;
  auto sample_ok = [&](double t) {
    return BracketGap(ref, t) <= options.max_gap && BracketGap(other, t) <= options.max_gap;
  };
  Pose2 ref_prev = InterpolatePose(ref, usable[0]);
  Pose2 other_prev = InterpolatePose(other, usable[0]);
  bool prev_ok = sample_ok(usable[0]);
  for (size_t k = 1; k < usable.size(); ++k) {
    const Pose2 ref_next = InterpolatePose(ref, usable[k]);
    const Pose2 other_next = InterpolatePose(other, usable[k]);
    const bool next_ok = sample_ok(usable[k]);
    if (prev_ok && next_ok) {
      out.pairs.push_back({IncrementalMotion(ref_prev, ref_next),
                           IncrementalMotion(other_prev, other_next), k - 1, usable[k - 1],
                           usable[k]});
    } else {
      ++out.dropped_intervals;
    }
    ref_prev = ref_next;
    other_prev = other_next;
    prev_ok = next_ok;
  }
  return out;
}

SynchronizedMotions ResampleSynchronous(const Trajectory2& ref, const Trajectory2& other,
                                        const ResampleOptions& options) {
  const std::vector<double> times = Timestamps(ref);
  return ResampleOnTimes(times, ref, other, options);
}

std::vector<double> Timestamps(const Trajectory2& traj) {
  std::vector<double> times;
  times.reserve(traj.size());
  for (const auto& s : traj.samples()) {
    times.push_back(s.t);
  }
  return times;
}

}  // namespace autocalib
