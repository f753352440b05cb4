#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocalib/geometry.h"
#include "autocalib/joint_opt.h"
#include "autocalib/ransac.h"
#include "autocalib/simulation.h"

namespace autocalib {

inline constexpr const char* kToolVersion = "autocalib 1.0.0";

struct SensorConfig {
  std::string id;
  SensorKind kind = SensorKind::kMetric2d;
  std::filesystem::path trajectory;
  std::optional<std::filesystem::path> ground_points;

  bool operator==(const SensorConfig&) const = default;
};

struct JointConfig {
  bool enabled = true;
  RobustLoss loss = RobustLoss::kCauchy;
  // Defaults to the RANSAC threshold.
  std::optional<double> loss_scale;
  std::vector<std::pair<std::string, std::string>> extra_pairs;
};

struct PipelineConfig {
  std::vector<SensorConfig> sensors;
  std::string reference;
  // Empty: the sensor with the lowest mean rate.
  std::string time_base;
  bool use_ransac = true;
  RansacConfig ransac;
  JointConfig joint;
  double max_gap = std::numeric_limits<double>::infinity();
  std::filesystem::path output_dir = "calibration_output";

  // Throws kConfig with a description of the first violated rule.
  void Validate() const;
  const SensorConfig& Sensor(const std::string& id) const;
};

// Relative paths inside the file are resolved against its directory.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);
PipelineConfig PipelineConfigFromJson(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir);
nlohmann::json PipelineConfigToJson(const PipelineConfig& cfg);

struct ResidualRow {
  size_t k = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  double before = 0.0;  // ||translation error|| at the pairwise estimate
  double after = 0.0;   // ... at the jointly refined estimate
  bool inlier = true;

  bool operator==(const ResidualRow&) const = default;
};

// Reference pose against the sensor trajectory mapped into the reference
// frame through the estimated calibration, both anchored at the first sample.
struct OverlayRow {
  double t = 0.0;
  double ref_x = 0.0, ref_y = 0.0, ref_theta = 0.0;
  double est_x = 0.0, est_y = 0.0, est_theta = 0.0;

  bool operator==(const OverlayRow&) const = default;
};

struct SensorReport {
  std::string id;
  SensorKind kind = SensorKind::kMetric2d;
  bool is_reference = false;
  bool ok = true;
  std::string error;
  std::vector<std::string> warnings;

  // Planar calibration: closed form / RANSAC, then jointly refined.
  std::optional<Sim2> initial;
  std::optional<Sim2> calibration;
  // scale * (x, y): the lever arm in reference units.
  double lever_x = 0.0;
  double lever_y = 0.0;

  std::optional<GroundAlignment> ground;
  double ground_rms = 0.0;
  size_t ground_points = 0;
  std::optional<double> metric_z;

  size_t n_pairs = 0;
  size_t n_inliers = 0;
  size_t dropped_intervals = 0;
  int ransac_iterations = 0;
  double kernel_margin = 0.0;
  double rms_before = 0.0;  // over inliers
  double rms_after = 0.0;

  std::vector<ResidualRow> residuals;
  std::vector<OverlayRow> overlay;

  bool operator==(const SensorReport&) const = default;
};

struct LoopConsistency {
  std::string first;
  std::string second;
  double before = 0.0;
  double after = 0.0;

  bool operator==(const LoopConsistency&) const = default;
};

struct CalibrationReport {
  std::string tool_version = kToolVersion;
  // Wall-clock creation time; not part of equality.
  std::string created;
  std::string reference;
  std::string time_base;
  nlohmann::json config;
  std::vector<SensorReport> sensors;
  bool joint_ran = false;
  std::string joint_termination;
  std::vector<double> joint_cost_trace;
  std::vector<LoopConsistency> loop_consistency;

  bool AnySensorFailed() const;
  // 0 when every sensor was calibrated, 2 otherwise.
  int ExitStatus() const;
  const SensorReport& Sensor(const std::string& id) const;

  bool operator==(const CalibrationReport& other) const;
};

// Runs ground alignment, projection, synchronization, RANSAC + closed form and
// joint refinement over the configured files. Per-sensor numerical failures
// are recorded in the report; I/O, parse and config errors throw.
CalibrationReport RunPipeline(const PipelineConfig& cfg);

nlohmann::json ReportToJson(const CalibrationReport& report);
CalibrationReport ReportFromJson(const nlohmann::json& j);

// Writes report.json plus residuals_<id>.csv and overlay_<id>.csv per sensor.
void WriteReport(const CalibrationReport& report, const std::filesystem::path& dir);
CalibrationReport ReadReport(const std::filesystem::path& dir);

// Writes trajectory/point files, config.json and ground_truth.json for a
// simulated instance, ready for RunPipeline.
void WriteSimFixture(const SimInstance& inst, const std::filesystem::path& dir);

SimConfig SimConfigFromJson(const nlohmann::json& j);
nlohmann::json SimConfigToJson(const SimConfig& cfg);

nlohmann::json Sim2ToJson(const Sim2& x);
Sim2 Sim2FromJson(const nlohmann::json& j);
nlohmann::json GroundToJson(const GroundAlignment& g);
GroundAlignment GroundFromJson(const nlohmann::json& j);

}  // namespace autocalib
