#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "autocalib/geometry.h"
#include "autocalib/ground_align.h"
#include "autocalib/sync.h"

namespace autocalib {

enum class SensorKind { kMetric2d, kMetric3d, kMonocular3d };

std::string SensorKindName(SensorKind kind);
SensorKind ParseSensorKind(const std::string& name);
inline bool IsThreeD(SensorKind kind) { return kind != SensorKind::kMetric2d; }
inline bool IsMetric(SensorKind kind) { return kind != SensorKind::kMonocular3d; }

// Pinhole camera with square pixels and optical axis along +z.
struct CameraModel {
  int width = 320;
  int height = 240;
  double diagonal_fov = 70.1 * std::numbers::pi / 180.0;

  double FocalLength() const;
};

struct SimSensor {
  std::string id;
  SensorKind kind = SensorKind::kMetric2d;
  // Planar calibration relative to the reference sensor. Its scale is the
  // inverse of the sensor's reconstruction scale (1 for metric sensors).
  Sim2 extrinsic;
  // Metric height and tilt over the ground; used by 3D sensors only.
  GroundAlignment ground;
  bool observes_ground = false;

  double ReconstructionScale() const { return 1.0 / extrinsic.scale(); }
};

// Axis mask bits for PerturbMotions.
enum NoiseAxis : unsigned {
  kNoiseTx = 1u << 0,
  kNoiseTy = 1u << 1,
  kNoiseTz = 1u << 2,
  kNoiseRx = 1u << 3,
  kNoiseRy = 1u << 4,
  kNoiseRz = 1u << 5,
};
inline constexpr unsigned kPlanarNoiseAxes = kNoiseTx | kNoiseTy | kNoiseRz;
inline constexpr unsigned kAllNoiseAxes = 0x3f;

struct SimConfig {
  double noise_level = 0.0;
  double trans_sigma_base = 0.001;  // m per unit noise level
  double rot_sigma_base = 0.03;     // rad per unit noise level
  double depth_sigma_base = 0.01;   // m per unit noise level
  int n_laps = 4;
  int samples_per_lap = 60;
  double lobe_radius = 1.5;    // m
  double sample_period = 0.2;  // s
  // sensors[0] is the reference (odometer-like, identity extrinsic).
  std::vector<SimSensor> sensors;
  CameraModel camera;
  uint64_t seed = 0;

  // Throws kInvalidArgument.
  void Validate() const;
};

// Two sensors: a planar odometer and a monocular camera observing the floor.
SimConfig DefaultSimConfig();

struct SimSensorData {
  // Ground-truth planar trajectory of the sensor's ground-projected frame, in
  // sensor units.
  Trajectory2 truth;
  // Noisy planar trajectory (2D sensors).
  Trajectory2 trajectory2;
  // Noisy 3D trajectory in sensor units (3D sensors).
  std::vector<TimedPose3> trajectory3;
  // Noisy incremental motions projected onto the plane with the true
  // alignment; aligned with the reference motions.
  std::vector<Pose2> planar_motions;
  std::vector<WeightedPoint3> ground_points;
  // Ground alignment in sensor units.
  GroundAlignment ground_scaled;
};

struct SimInstance {
  SimConfig config;
  std::vector<SimSensorData> sensors;

  // Synchronous pairs (reference = sensor i, other = sensor j) built from the
  // noisy planar motions.
  std::vector<MotionPair> Pairs(size_t i, size_t j) const;
};

// Figure-eight (x = 2R sin u, y = R sin 2u) sampled uniformly in u, heading
// tangent to the path, repeated n_laps times.
Trajectory2 GenerateEightPath(const SimConfig& cfg);

// Planar trajectory of a sensor rigidly attached with calibration x: q_j =
// q_i + x with the scale dropped, so translations are in x's source units.
Trajectory2 ApplyExtrinsic(const Trajectory2& ref, const Sim2& x);

// Adds N(0, (level * base)^2) noise on the selected axes. Draws are keyed on
// (seed, stream, axis, index).
std::vector<Pose2> PerturbMotions(std::span<const Pose2> motions, double level,
                                  double trans_sigma, double rot_sigma, unsigned axes,
                                  uint64_t seed, uint64_t stream);
std::vector<Pose3> PerturbMotions(std::span<const Pose3> motions, double level,
                                  double trans_sigma, double rot_sigma, unsigned axes,
                                  uint64_t seed, uint64_t stream);

// Back-projects every pixel onto the plane below a sensor with metric
// alignment g and returns the hits in sensor coordinates multiplied by
// `scale`, with depth noise of sigma level * depth_sigma_base (metric).
// Rays that never reach the plane are dropped; throws kGeometry if none hit.
std::vector<WeightedPoint3> GenerateGroundPoints(const SimConfig& cfg, const GroundAlignment& g,
                                                 double scale, uint64_t seed, uint64_t stream);

// Motion of a sensor mounted at T_gs = (R_y R_x, (0, 0, z)) over the ground
// frame when that frame performs the planar motion p.
Pose3 LiftPlanarMotion(const Pose2& p, const GroundAlignment& g);

SimInstance GenerateInstance(const SimConfig& cfg);

}  // namespace autocalib
