#include "autocalib/simulation.h"

#include <cmath>

#include "autocalib/error.h"
#include "autocalib/random.h"

namespace autocalib {

namespace {

constexpr uint64_t kGroundStreamOffset = 1000;

double DegToRad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

std::string SensorKindName(SensorKind kind) {
  switch (kind) {
    case SensorKind::kMetric2d: return "metric2d";
    case SensorKind::kMetric3d: return "metric3d";
    case SensorKind::kMonocular3d: return "monocular3d";
  }
  return "unknown";
}

SensorKind ParseSensorKind(const std::string& name) {
  if (name == "metric2d") return SensorKind::kMetric2d;
  if (name == "metric3d") return SensorKind::kMetric3d;
  if (name == "monocular3d") return SensorKind::kMonocular3d;
  Fail(ErrorCode::kConfig, "unknown sensor kind '" + name + "'");
}

double CameraModel::FocalLength() const {
  const double half_diag = 0.5 * std::hypot(static_cast<double>(width), static_cast<double>(height));
  return half_diag / std::tan(0.5 * diagonal_fov);
}

void SimConfig::Validate() const {
  if (!(noise_level >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "noise level must be non-negative");
  }
  if (!(trans_sigma_base >= 0.0 && rot_sigma_base >= 0.0 && depth_sigma_base >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "noise sigmas must be non-negative");
  }
  if (n_laps < 1 || samples_per_lap < 8) {
    Fail(ErrorCode::kInvalidArgument, "need n_laps >= 1 and samples_per_lap >= 8");
  }
  if (!(lobe_radius > 0.0) || !(sample_period > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "lobe radius and sample period must be positive");
  }
  if (!(camera.diagonal_fov > 0.0 && camera.diagonal_fov < std::numbers::pi) ||
      camera.width < 1 || camera.height < 1) {
    Fail(ErrorCode::kInvalidArgument, "camera needs a positive size and FOV in (0, pi)");
  }
  if (sensors.empty()) {
    Fail(ErrorCode::kInvalidArgument, "simulation needs a reference sensor");
  }
  const Sim2& ref = sensors.front().extrinsic;
  if (ref.x() != 0.0 || ref.y() != 0.0 || ref.theta() != 0.0 || ref.scale() != 1.0 ||
      !IsMetric(sensors.front().kind)) {
    Fail(ErrorCode::kInvalidArgument, "the reference sensor must be metric with identity extrinsic");
  }
  for (const SimSensor& s : sensors) {
    if (IsMetric(s.kind) && s.extrinsic.scale() != 1.0) {
      Fail(ErrorCode::kInvalidArgument, "metric sensor '" + s.id + "' must have unit scale");
    }
  }
}

SimConfig DefaultSimConfig() {
  SimConfig cfg;
  SimSensor odom;
  odom.id = "odom";
  odom.kind = SensorKind::kMetric2d;
  SimSensor cam;
  cam.id = "camera";
  cam.kind = SensorKind::kMonocular3d;
  // Metric lever arm (0.30, -0.10) m, reconstruction at half metric scale.
  cam.extrinsic = Sim2(0.15, -0.05, DegToRad(20.0), 2.0);
  // Looking down and forward, 60 degrees below the horizon.
  cam.ground = GroundAlignment(0.8, DegToRad(150.0), DegToRad(5.0));
  cam.observes_ground = true;
  cfg.sensors = {odom, cam};
  return cfg;
}

Trajectory2 GenerateEightPath(const SimConfig& cfg) {
  if (cfg.n_laps < 1 || cfg.samples_per_lap < 8) {
    Fail(ErrorCode::kInvalidArgument, "need n_laps >= 1 and samples_per_lap >= 8");
  }
  const double r = cfg.lobe_radius;
  const int total = cfg.n_laps * cfg.samples_per_lap;
  std::vector<TimedPose2> samples;
  samples.reserve(static_cast<size_t>(total) + 1);
  for (int k = 0; k <= total; ++k) {
    // Phase reduced per lap so every lap starts from the same value exactly.
    const int in_lap = k % cfg.samples_per_lap;
    const double u = 2.0 * std::numbers::pi * in_lap / cfg.samples_per_lap;
    const double x = 2.0 * r * std::sin(u);
    const double y = r * std::sin(2.0 * u);
    const double heading = std::atan2(2.0 * r * std::cos(2.0 * u), 2.0 * r * std::cos(u));
    samples.push_back({k * cfg.sample_period, Pose2(x, y, heading)});
  }
  return Trajectory2(std::move(samples));
}

Trajectory2 ApplyExtrinsic(const Trajectory2& ref, const Sim2& x) {
  std::vector<TimedPose2> out;
  out.reserve(ref.size());
  for (const TimedPose2& s : ref.samples()) {
    out.push_back({s.t, DropScale(Compose(s.pose.ToSim2(), x))});
  }
  return Trajectory2(std::move(out));
}

std::vector<Pose2> PerturbMotions(std::span<const Pose2> motions, double level,
                                  double trans_sigma, double rot_sigma, unsigned axes,
                                  uint64_t seed, uint64_t stream) {
  std::vector<Pose2> out(motions.begin(), motions.end());
  if (level == 0.0) {
    return out;
  }
  auto draw = [&](unsigned axis, size_t k, double sigma) {
    if (!(axes & axis)) {
      return 0.0;
    }
    return level * sigma * CounterNormal(seed, {stream, axis, static_cast<uint64_t>(k)});
  };
  for (size_t k = 0; k < out.size(); ++k) {
    const Pose2& m = motions[k];
    out[k] = Pose2(m.x() + draw(kNoiseTx, k, trans_sigma), m.y() + draw(kNoiseTy, k, trans_sigma),
                   m.theta() + draw(kNoiseRz, k, rot_sigma));
  }
  return out;
}

std::vector<Pose3> PerturbMotions(std::span<const Pose3> motions, double level,
                                  double trans_sigma, double rot_sigma, unsigned axes,
                                  uint64_t seed, uint64_t stream) {
  std::vector<Pose3> out(motions.begin(), motions.end());
  if (level == 0.0) {
    return out;
  }
  auto draw = [&](unsigned axis, size_t k, double sigma) {
    if (!(axes & axis)) {
      return 0.0;
    }
    return level * sigma * CounterNormal(seed, {stream, axis, static_cast<uint64_t>(k)});
  };
  for (size_t k = 0; k < out.size(); ++k) {
    const Eigen::Vector3d dt(draw(kNoiseTx, k, trans_sigma), draw(kNoiseTy, k, trans_sigma),
                             draw(kNoiseTz, k, trans_sigma));
    const Eigen::Vector3d dr(draw(kNoiseRx, k, rot_sigma), draw(kNoiseRy, k, rot_sigma),
                             draw(kNoiseRz, k, rot_sigma));
    Eigen::Matrix3d noise_rot = Eigen::Matrix3d::Identity();
    if (dr.norm() > 0.0) {
      noise_rot = Eigen::AngleAxisd(dr.norm(), dr.normalized()).toRotationMatrix();
    }
    out[k].rotation = motions[k].rotation * noise_rot;
    out[k].translation = motions[k].translation + dt;
  }
  return out;
}

std::vector<WeightedPoint3> GenerateGroundPoints(const SimConfig& cfg, const GroundAlignment& g,
                                                 double scale, uint64_t seed, uint64_t stream) {
  if (!(scale > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "reconstruction scale must be positive");
  }
  const CameraModel& cam = cfg.camera;
  const double f = cam.FocalLength();
  const Eigen::Matrix3d r = ToPose3(g).rotation;
  const double sigma = cfg.noise_level * cfg.depth_sigma_base;
  std::vector<WeightedPoint3> points;
  points.reserve(static_cast<size_t>(cam.width) * static_cast<size_t>(cam.height));
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Eigen::Vector3d ray((u + 0.5 - 0.5 * cam.width) / f, (v + 0.5 - 0.5 * cam.height) / f,
                                1.0);
      const double down = (r * ray).z();
      if (!(down < -1e-9)) {
        continue;
      }
      double depth = -g.z() / down;
      if (sigma > 0.0) {
        const uint64_t index = static_cast<uint64_t>(v) * static_cast<uint64_t>(cam.width) +
                               static_cast<uint64_t>(u);
        depth += sigma * CounterNormal(seed, {stream + kGroundStreamOffset, index});
      }
      points.push_back({scale * depth * ray, 1.0});
    }
  }
  if (points.empty()) {
    Fail(ErrorCode::kGeometry, "no camera ray reaches the ground plane");
  }
  return points;
}

Pose3 LiftPlanarMotion(const Pose2& p, const GroundAlignment& g) {
  const Pose3 mount = ToPose3(g);
  const Pose3 planar(RotationZ(p.theta()), Eigen::Vector3d(p.x(), p.y(), 0.0));
  return mount.Inverse() * planar * mount;
}

SimInstance GenerateInstance(const SimConfig& cfg) {
  cfg.Validate();
  SimInstance inst;
  inst.config = cfg;
  const Trajectory2 ref = GenerateEightPath(cfg);
  const std::vector<double> times = Timestamps(ref);

  for (size_t idx = 0; idx < cfg.sensors.size(); ++idx) {
    const SimSensor& sensor = cfg.sensors[idx];
    const double c = sensor.ReconstructionScale();
    SimSensorData data;
    data.truth = idx == 0 ? ref : ApplyExtrinsic(ref, sensor.extrinsic);
    const std::vector<Pose2> motions = IncrementalMotions(data.truth);
    const Pose2& start = data.truth[0].pose;

    if (!IsThreeD(sensor.kind)) {
      data.planar_motions = PerturbMotions(motions, cfg.noise_level, c * cfg.trans_sigma_base,
                                           cfg.rot_sigma_base, kPlanarNoiseAxes, cfg.seed, idx);
      const std::vector<Pose2> poses = IntegrateMotions(start, data.planar_motions);
      std::vector<TimedPose2> samples;
      for (size_t k = 0; k < poses.size(); ++k) {
        samples.push_back({times[k], poses[k]});
      }
      data.trajectory2 = Trajectory2(std::move(samples));
    } else {
      data.ground_scaled = GroundAlignment(c * sensor.ground.z(), sensor.ground.alpha(),
                                           sensor.ground.beta());
      std::vector<Pose3> lifted;
      lifted.reserve(motions.size());
      for (const Pose2& m : motions) {
        lifted.push_back(LiftPlanarMotion(m, data.ground_scaled));
      }
      const std::vector<Pose3> noisy =
          PerturbMotions(lifted, cfg.noise_level, c * cfg.trans_sigma_base, cfg.rot_sigma_base,
                         kAllNoiseAxes, cfg.seed, idx);
      Pose3 pose = Pose3(RotationZ(start.theta()), Eigen::Vector3d(start.x(), start.y(), 0.0)) *
                   ToPose3(data.ground_scaled);
      data.trajectory3.push_back({times[0], pose});
      for (size_t k = 0; k < noisy.size(); ++k) {
        pose = pose * noisy[k];
        data.trajectory3.push_back({times[k + 1], pose});
        data.planar_motions.push_back(ProjectMotionToPlane(data.ground_scaled, noisy[k]));
      }
      if (sensor.observes_ground) {
        data.ground_points = GenerateGroundPoints(cfg, sensor.ground, c, cfg.seed, idx);
      }
    }
    inst.sensors.push_back(std::move(data));
  }
  return inst;
}

std::vector<MotionPair> SimInstance::Pairs(size_t i, size_t j) const {
  const SimSensorData& a = sensors.at(i);
  const SimSensorData& b = sensors.at(j);
  std::vector<MotionPair> pairs;
  for (size_t k = 0; k < a.planar_motions.size(); ++k) {
    pairs.push_back({a.planar_motions[k], b.planar_motions[k], k, a.truth[k].t, a.truth[k + 1].t});
  }
  return pairs;
}

}  // namespace autocalib
