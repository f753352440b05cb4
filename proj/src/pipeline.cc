#include "autocalib/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "autocalib/error.h"
#include "autocalib/ground_align.h"
#include "autocalib/io.h"
#include "autocalib/planar_calib.h"
#include "autocalib/sync.h"

namespace autocalib {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// JSON helpers

json Sim2ToJson(const Sim2& x) {
  return {{"x", x.x()}, {"y", x.y()}, {"theta", x.theta()}, {"scale", x.scale()}};
}

Sim2 Sim2FromJson(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>(),
          j.value("scale", 1.0)};
}

json GroundToJson(const GroundAlignment& g) {
  return {{"z", g.z()}, {"alpha", g.alpha()}, {"beta", g.beta()}};
}

GroundAlignment GroundFromJson(const json& j) {
  return {j.at("z").get<double>(), j.at("alpha").get<double>(), j.at("beta").get<double>()};
}

namespace {

std::string LossName(RobustLoss loss) {
  switch (loss) {
    case RobustLoss::kCauchy: return "cauchy";
    case RobustLoss::kCauchyPerComponent: return "cauchy_per_component";
    case RobustLoss::kTrivial: return "none";
  }
  return "cauchy";
}

RobustLoss ParseLoss(const std::string& name) {
  if (name == "cauchy") return RobustLoss::kCauchy;
  if (name == "cauchy_per_component") return RobustLoss::kCauchyPerComponent;
  if (name == "none") return RobustLoss::kTrivial;
  Fail(ErrorCode::kConfig, "unknown loss '" + name + "'");
}

json FiniteOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string NowIso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::Validate() const {
  std::set<std::string> ids;
  for (const SensorConfig& s : sensors) {
    if (s.id.empty()) {
      Fail(ErrorCode::kConfig, "sensor id must not be empty");
    }
    if (!ids.insert(s.id).second) {
      Fail(ErrorCode::kConfig, "duplicate sensor id '" + s.id + "'");
    }
  }
  if (sensors.size() < 2) {
    Fail(ErrorCode::kConfig, "nothing to calibrate: at least one sensor besides the reference");
  }
  if (!ids.count(reference)) {
    Fail(ErrorCode::kConfig, "reference sensor '" + reference + "' is not configured");
  }
  if (!IsMetric(Sensor(reference).kind)) {
    Fail(ErrorCode::kConfig, "the reference sensor must be metric2d or metric3d");
  }
  if (!time_base.empty() && !ids.count(time_base)) {
    Fail(ErrorCode::kConfig, "time-base sensor '" + time_base + "' is not configured");
  }
  for (const auto& [a, b] : joint.extra_pairs) {
    if (!ids.count(a) || !ids.count(b) || a == b) {
      Fail(ErrorCode::kConfig, "extra pair (" + a + ", " + b + ") names unknown or equal sensors");
    }
    if (a == reference || b == reference) {
      Fail(ErrorCode::kConfig, "extra pairs are between non-reference sensors");
    }
    if (!IsMetric(Sensor(a).kind)) {
      Fail(ErrorCode::kConfig,
           "extra pair (" + a + ", " + b + ") must start at a metric sensor");
    }
  }
  if (joint.loss_scale && !(*joint.loss_scale > 0.0)) {
    Fail(ErrorCode::kConfig, "joint loss scale must be positive");
  }
  if (!(max_gap > 0.0)) {
    Fail(ErrorCode::kConfig, "max_gap must be positive");
  }
  try {
    ransac.Validate();
  } catch (const CalibError& e) {
    Fail(ErrorCode::kConfig, e.what());
  }
}

const SensorConfig& PipelineConfig::Sensor(const std::string& id) const {
  for (const SensorConfig& s : sensors) {
    if (s.id == id) {
      return s;
    }
  }
  Fail(ErrorCode::kConfig, "unknown sensor '" + id + "'");
}

PipelineConfig PipelineConfigFromJson(const json& j, const fs::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  PipelineConfig cfg;
  try {
    for (const json& s : j.at("sensors")) {
      SensorConfig sc;
      sc.id = s.at("id").get<std::string>();
      sc.kind = ParseSensorKind(s.at("kind").get<std::string>());
      sc.trajectory = resolve(s.at("trajectory").get<std::string>());
      if (s.contains("ground_points") && !s["ground_points"].is_null()) {
        sc.ground_points = resolve(s["ground_points"].get<std::string>());
      }
      cfg.sensors.push_back(std::move(sc));
    }
    cfg.reference = j.at("reference").get<std::string>();
    cfg.time_base = j.value("time_base", std::string());
    if (j.contains("ransac")) {
      const json& r = j["ransac"];
      cfg.use_ransac = r.value("enabled", true);
      cfg.ransac.threshold = r.value("threshold", cfg.ransac.threshold);
      cfg.ransac.max_iterations = r.value("max_iterations", cfg.ransac.max_iterations);
      cfg.ransac.min_sample = r.value("min_sample", cfg.ransac.min_sample);
      cfg.ransac.seed = r.value("seed", cfg.ransac.seed);
      cfg.ransac.confidence = r.value("confidence", cfg.ransac.confidence);
    }
    if (j.contains("joint")) {
      const json& jo = j["joint"];
      cfg.joint.enabled = jo.value("enabled", true);
      cfg.joint.loss = ParseLoss(jo.value("loss", std::string("cauchy")));
      if (jo.contains("loss_scale") && !jo["loss_scale"].is_null()) {
        cfg.joint.loss_scale = jo["loss_scale"].get<double>();
      }
      for (const json& p : jo.value("extra_pairs", json::array())) {
        cfg.joint.extra_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
      }
    }
    if (j.contains("sync") && j["sync"].contains("max_gap") && !j["sync"]["max_gap"].is_null()) {
      cfg.max_gap = j["sync"]["max_gap"].get<double>();
    }
    cfg.output_dir = resolve(j.value("output_dir", std::string("calibration_output")));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("malformed pipeline config: ") + e.what());
  }
  return cfg;
}

PipelineConfig LoadPipelineConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    Fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return PipelineConfigFromJson(j, path.parent_path());
}

json PipelineConfigToJson(const PipelineConfig& cfg) {
  json sensors = json::array();
  for (const SensorConfig& s : cfg.sensors) {
    json js = {{"id", s.id}, {"kind", SensorKindName(s.kind)}, {"trajectory", s.trajectory.string()}};
    if (s.ground_points) {
      js["ground_points"] = s.ground_points->string();
    }
    sensors.push_back(std::move(js));
  }
  json pairs = json::array();
  for (const auto& [a, b] : cfg.joint.extra_pairs) {
    pairs.push_back({a, b});
  }
  json j = {
      {"sensors", sensors},
      {"reference", cfg.reference},
      {"time_base", cfg.time_base},
      {"ransac",
       {{"enabled", cfg.use_ransac},
        {"threshold", cfg.ransac.threshold},
        {"max_iterations", cfg.ransac.max_iterations},
        {"min_sample", cfg.ransac.min_sample},
        {"seed", cfg.ransac.seed},
        {"confidence", cfg.ransac.confidence}}},
      {"joint",
       {{"enabled", cfg.joint.enabled},
        {"loss", LossName(cfg.joint.loss)},
        {"loss_scale", cfg.joint.loss_scale ? json(*cfg.joint.loss_scale) : json(nullptr)},
        {"extra_pairs", pairs}}},
      {"sync", {{"max_gap", FiniteOrNull(cfg.max_gap)}}},
      {"output_dir", cfg.output_dir.string()},
  };
  return j;
}

// ---------------------------------------------------------------------------
// Report

bool CalibrationReport::AnySensorFailed() const {
  return std::any_of(sensors.begin(), sensors.end(), [](const SensorReport& s) { return !s.ok; });
}

int CalibrationReport::ExitStatus() const { return AnySensorFailed() ? 2 : 0; }

const SensorReport& CalibrationReport::Sensor(const std::string& id) const {
  for (const SensorReport& s : sensors) {
    if (s.id == id) {
      return s;
    }
  }
  Fail(ErrorCode::kInvalidArgument, "report has no sensor '" + id + "'");
}

bool CalibrationReport::operator==(const CalibrationReport& o) const {
  return tool_version == o.tool_version && reference == o.reference &&
         time_base == o.time_base && config == o.config && sensors == o.sensors &&
         joint_ran == o.joint_ran && joint_termination == o.joint_termination &&
         joint_cost_trace == o.joint_cost_trace && loop_consistency == o.loop_consistency;
}

json ReportToJson(const CalibrationReport& r) {
  json sensors = json::array();
  for (const SensorReport& s : r.sensors) {
    json js = {
        {"id", s.id},
        {"kind", SensorKindName(s.kind)},
        {"is_reference", s.is_reference},
        {"ok", s.ok},
        {"error", s.error},
        {"warnings", s.warnings},
        {"initial", s.initial ? Sim2ToJson(*s.initial) : json(nullptr)},
        {"calibration", s.calibration ? Sim2ToJson(*s.calibration) : json(nullptr)},
        {"metric_lever_arm", {s.lever_x, s.lever_y}},
        {"ground", s.ground ? GroundToJson(*s.ground) : json(nullptr)},
        {"ground_rms", s.ground_rms},
        {"ground_points", s.ground_points},
        {"metric_z", s.metric_z ? json(*s.metric_z) : json(nullptr)},
        {"n_pairs", s.n_pairs},
        {"n_inliers", s.n_inliers},
        {"dropped_intervals", s.dropped_intervals},
        {"ransac_iterations", s.ransac_iterations},
        {"kernel_margin", s.kernel_margin},
        {"rms_before", s.rms_before},
        {"rms_after", s.rms_after},
    };
    sensors.push_back(std::move(js));
  }
  json loops = json::array();
  for (const LoopConsistency& l : r.loop_consistency) {
    loops.push_back({{"first", l.first}, {"second", l.second}, {"before", l.before}, {"after", l.after}});
  }
  return {
      {"tool_version", r.tool_version},
      {"created", r.created},
      {"reference", r.reference},
      {"time_base", r.time_base},
      {"config", r.config},
      {"sensors", sensors},
      {"joint", {{"ran", r.joint_ran}, {"termination", r.joint_termination}, {"cost_trace", r.joint_cost_trace}}},
      {"loop_consistency", loops},
  };
}

CalibrationReport ReportFromJson(const json& j) {
  CalibrationReport r;
  try {
    r.tool_version = j.at("tool_version").get<std::string>();
    r.created = j.value("created", std::string());
    r.reference = j.at("reference").get<std::string>();
    r.time_base = j.at("time_base").get<std::string>();
    r.config = j.at("config");
    for (const json& js : j.at("sensors")) {
      SensorReport s;
      s.id = js.at("id").get<std::string>();
      s.kind = ParseSensorKind(js.at("kind").get<std::string>());
      s.is_reference = js.at("is_reference").get<bool>();
      s.ok = js.at("ok").get<bool>();
      s.error = js.at("error").get<std::string>();
      s.warnings = js.at("warnings").get<std::vector<std::string>>();
      if (!js.at("initial").is_null()) s.initial = Sim2FromJson(js["initial"]);
      if (!js.at("calibration").is_null()) s.calibration = Sim2FromJson(js["calibration"]);
      s.lever_x = js.at("metric_lever_arm").at(0).get<double>();
      s.lever_y = js.at("metric_lever_arm").at(1).get<double>();
      if (!js.at("ground").is_null()) s.ground = GroundFromJson(js["ground"]);
      s.ground_rms = js.at("ground_rms").get<double>();
      s.ground_points = js.at("ground_points").get<size_t>();
      if (!js.at("metric_z").is_null()) s.metric_z = js["metric_z"].get<double>();
      s.n_pairs = js.at("n_pairs").get<size_t>();
      s.n_inliers = js.at("n_inliers").get<size_t>();
      s.dropped_intervals = js.at("dropped_intervals").get<size_t>();
      s.ransac_iterations = js.at("ransac_iterations").get<int>();
      s.kernel_margin = js.at("kernel_margin").get<double>();
      s.rms_before = js.at("rms_before").get<double>();
      s.rms_after = js.at("rms_after").get<double>();
      r.sensors.push_back(std::move(s));
    }
    const json& jo = j.at("joint");
    r.joint_ran = jo.at("ran").get<bool>();
    r.joint_termination = jo.at("termination").get<std::string>();
    r.joint_cost_trace = jo.at("cost_trace").get<std::vector<double>>();
    for (const json& l : j.at("loop_consistency")) {
      r.loop_consistency.push_back({l.at("first").get<std::string>(), l.at("second").get<std::string>(),
                                    l.at("before").get<double>(), l.at("after").get<double>()});
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed report: ") + e.what());
  }
  return r;
}

namespace {

std::vector<std::vector<std::string>> ReadCsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    Fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  }
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

double ToDouble(const std::string& s, const fs::path& path) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception&) {
    Fail(ErrorCode::kParse, path.string() + ": bad number '" + s + "'");
  }
}

}  // namespace

void WriteReport(const CalibrationReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    Fail(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  }
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) {
      Fail(ErrorCode::kIo, "cannot open '" + p.string() + "' for writing");
    }
    return out;
  };
  {
    std::ofstream out = open(dir / "report.json");
    out << ReportToJson(report).dump(2) << '\n';
    if (!out) Fail(ErrorCode::kIo, "failed writing report.json");
  }
  for (const SensorReport& s : report.sensors) {
    if (s.is_reference) {
      continue;
    }
    {
      const fs::path p = dir / ("residuals_" + s.id + ".csv");
      std::ofstream out = open(p);
      out << "k,t0,t1,before,after,inlier\n";
      for (const ResidualRow& r : s.residuals) {
        out << r.k << ',' << FormatDouble(r.t0) << ',' << FormatDouble(r.t1) << ','
            << FormatDouble(r.before) << ',' << FormatDouble(r.after) << ',' << (r.inlier ? 1 : 0)
            << '\n';
      }
      if (!out) Fail(ErrorCode::kIo, "failed writing '" + p.string() + "'");
    }
    {
      const fs::path p = dir / ("overlay_" + s.id + ".csv");
      std::ofstream out = open(p);
      out << "t,ref_x,ref_y,ref_theta,est_x,est_y,est_theta\n";
      for (const OverlayRow& r : s.overlay) {
        out << FormatDouble(r.t) << ',' << FormatDouble(r.ref_x) << ',' << FormatDouble(r.ref_y)
            << ',' << FormatDouble(r.ref_theta) << ',' << FormatDouble(r.est_x) << ','
            << FormatDouble(r.est_y) << ',' << FormatDouble(r.est_theta) << '\n';
      }
      if (!out) Fail(ErrorCode::kIo, "failed writing '" + p.string() + "'");
    }
  }
}

CalibrationReport ReadReport(const fs::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) {
    Fail(ErrorCode::kIo, "cannot open '" + (dir / "report.json").string() + "'");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, e.what());
  }
  CalibrationReport report = ReportFromJson(j);
  for (SensorReport& s : report.sensors) {
    if (s.is_reference) {
      continue;
    }
    const fs::path rp = dir / ("residuals_" + s.id + ".csv");
    for (const auto& f : ReadCsv(rp)) {
      if (f.size() != 6) Fail(ErrorCode::kParse, rp.string() + ": expected 6 columns");
      s.residuals.push_back({static_cast<size_t>(std::stoull(f[0])), ToDouble(f[1], rp),
                             ToDouble(f[2], rp), ToDouble(f[3], rp), ToDouble(f[4], rp),
                             f[5] == "1"});
    }
    const fs::path op = dir / ("overlay_" + s.id + ".csv");
    for (const auto& f : ReadCsv(op)) {
      if (f.size() != 7) Fail(ErrorCode::kParse, op.string() + ": expected 7 columns");
      s.overlay.push_back({ToDouble(f[0], op), ToDouble(f[1], op), ToDouble(f[2], op),
                           ToDouble(f[3], op), ToDouble(f[4], op), ToDouble(f[5], op),
                           ToDouble(f[6], op)});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

struct SensorState {
  const SensorConfig* config = nullptr;
  Trajectory2 planar;
  SensorReport report;
  SynchronizedMotions sync;
  std::vector<bool> inliers;
};

double RmsOverInliers(const std::vector<ResidualRow>& rows, bool after) {
  double sum = 0.0;
  size_t n = 0;
  for (const ResidualRow& r : rows) {
    if (r.inlier) {
      const double v = after ? r.after : r.before;
      sum += v * v;
      ++n;
    }
  }
  return n > 0 ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

std::vector<MotionPair> InlierPairs(const std::vector<MotionPair>& pairs,
                                    const std::vector<bool>& mask) {
  std::vector<MotionPair> out;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (mask[i]) out.push_back(pairs[i]);
  }
  return out;
}

struct PairEstimate {
  Sim2 params;
  std::vector<bool> mask;
  int iterations = 0;
  double kernel_margin = 0.0;
  bool thin_margin = false;
};

PairEstimate EstimatePair(const std::vector<MotionPair>& pairs, const PipelineConfig& cfg) {
  PairEstimate est;
  if (cfg.use_ransac) {
    const RobustEstimate r = RansacPairwise(pairs, cfg.ransac);
    est.params = r.params;
    est.mask = r.inlier_mask;
    est.iterations = r.iterations_run;
    est.kernel_margin = r.solution.kernel_margin;
    est.thin_margin = r.solution.thin_margin;
  } else {
    const PairwiseSolution s = SolvePairwise(pairs);
    est.params = s.params;
    est.mask.assign(pairs.size(), true);
    est.kernel_margin = s.kernel_margin;
    est.thin_margin = s.thin_margin;
  }
  return est;
}

std::vector<OverlayRow> BuildOverlay(const std::vector<double>& times, const Trajectory2& ref,
                                     const Trajectory2& sensor, const Sim2& x) {
  std::vector<OverlayRow> rows;
  const double begin = std::max(ref.start_time(), sensor.start_time());
  const double end = std::min(ref.end_time(), sensor.end_time());
  std::optional<Pose2> ref_anchor;
  std::optional<Pose2> sensor_anchor;
  const Sim2 x_inv = Inverse(x);
  for (double t : times) {
    if (t < begin || t > end) {
      continue;
    }
    const Pose2 q_ref = InterpolatePose(ref, t);
    const Pose2 q_sensor = InterpolatePose(sensor, t);
    if (!ref_anchor) {
      ref_anchor = q_ref;
      sensor_anchor = q_sensor;
    }
    const Pose2 motion = IncrementalMotion(*sensor_anchor, q_sensor);
    const Pose2 est = DropScale(
        Compose(Compose(Compose(ref_anchor->ToSim2(), x), motion.ToSim2()), x_inv));
    rows.push_back({t, q_ref.x(), q_ref.y(), q_ref.theta(), est.x(), est.y(), est.theta()});
  }
  return rows;
}

}  // namespace

CalibrationReport RunPipeline(const PipelineConfig& cfg) {
  cfg.Validate();
  CalibrationReport report;
  report.created = NowIso8601();
  report.reference = cfg.reference;
  report.config = PipelineConfigToJson(cfg);

  // Stage 3/4: load, align to the ground, project.
  std::vector<SensorState> states;
  for (const SensorConfig& sc : cfg.sensors) {
    SensorState st;
    st.config = &sc;
    st.report.id = sc.id;
    st.report.kind = sc.kind;
    st.report.is_reference = sc.id == cfg.reference;
    if (!IsThreeD(sc.kind)) {
      st.planar = LoadPlanarTrajectory(sc.trajectory);
      if (sc.ground_points) {
        st.report.warnings.push_back("planar sensor: ground points ignored");
      }
    } else {
      const std::vector<TimedPose3> traj3 = LoadSixDofTrajectory(sc.trajectory);
      GroundAlignment g;
      if (sc.ground_points) {
        const std::vector<WeightedPoint3> points = LoadPoints(*sc.ground_points);
        try {
          const GroundSolution gs = SolveGroundAlignment(points);
          g = gs.alignment;
          st.report.ground = g;
          st.report.ground_rms = gs.rms_residual;
          st.report.ground_points = points.size();
        } catch (const CalibError& e) {
          st.report.ok = false;
          st.report.error = std::string("ground alignment: ") + e.what();
        }
      } else {
        st.report.warnings.push_back(
            "no ground points: ground alignment skipped, motions projected without tilt "
            "correction");
      }
      if (st.report.ok) {
        st.planar = ProjectTrajectory(g, traj3);
      }
    }
    spdlog::info("loaded sensor '{}' ({})", sc.id, SensorKindName(sc.kind));
    states.push_back(std::move(st));
  }

  std::map<std::string, size_t> index;
  for (size_t i = 0; i < states.size(); ++i) {
    index[states[i].report.id] = i;
  }
  SensorState& ref = states[index.at(cfg.reference)];
  if (!ref.report.ok) {
    Fail(ErrorCode::kData, "reference sensor failed: " + ref.report.error);
  }

  // Time base: configured, else the slowest stream.
  std::string time_base = cfg.time_base;
  if (time_base.empty()) {
    double slowest = std::numeric_limits<double>::infinity();
    for (const SensorState& st : states) {
      if (st.report.ok && st.planar.MeanRate() < slowest) {
        slowest = st.planar.MeanRate();
        time_base = st.report.id;
      }
    }
  }
  if (!states[index.at(time_base)].report.ok) {
    time_base = cfg.reference;
  }
  report.time_base = time_base;
  const std::vector<double> times = Timestamps(states[index.at(time_base)].planar);
  ResampleOptions resample;
  resample.max_gap = cfg.max_gap;

  // Stage 5: synchronize and solve each sensor against the reference.
  for (SensorState& st : states) {
    if (st.report.is_reference || !st.report.ok) {
      continue;
    }
    try {
      st.sync = ResampleOnTimes(times, ref.planar, st.planar, resample);
      st.report.n_pairs = st.sync.pairs.size();
      st.report.dropped_intervals = st.sync.dropped_intervals;
      if (st.sync.dropped_intervals > 0) {
        st.report.warnings.push_back(std::to_string(st.sync.dropped_intervals) +
                                     " intervals dropped for missing samples");
      }
      const PairEstimate est = EstimatePair(st.sync.pairs, cfg);
      st.report.initial = est.params;
      st.report.calibration = est.params;
      st.inliers = est.mask;
      st.report.ransac_iterations = est.iterations;
      st.report.kernel_margin = est.kernel_margin;
      st.report.n_inliers = static_cast<size_t>(std::count(est.mask.begin(), est.mask.end(), true));
      if (est.thin_margin) {
        st.report.warnings.push_back("rank margin of the pairwise solve is thin");
      }
    } catch (const CalibError& e) {
      st.report.ok = false;
      st.report.error = e.what();
      spdlog::warn("sensor '{}' failed: {}", st.report.id, e.what());
    }
  }

  // Stage 6: joint refinement over the sensors that succeeded.
  std::vector<size_t> solved;
  for (size_t i = 0; i < states.size(); ++i) {
    if (!states[i].report.is_reference && states[i].report.ok) {
      solved.push_back(i);
    }
  }
  std::map<size_t, int> joint_index;
  for (size_t k = 0; k < solved.size(); ++k) {
    joint_index[solved[k]] = static_cast<int>(k) + 1;
  }

  struct ExtraPair {
    size_t a, b;
    std::vector<MotionPair> pairs;
    Sim2 direct;
  };
  std::vector<ExtraPair> extras;
  for (const auto& [ida, idb] : cfg.joint.extra_pairs) {
    const size_t a = index.at(ida);
    const size_t b = index.at(idb);
    if (!joint_index.count(a) || !joint_index.count(b)) {
      report.loop_consistency.push_back({ida, idb, std::nan(""), std::nan("")});
      continue;
    }
    try {
      const SynchronizedMotions sync = ResampleOnTimes(times, states[a].planar, states[b].planar, resample);
      const PairEstimate est = EstimatePair(sync.pairs, cfg);
      extras.push_back({a, b, InlierPairs(sync.pairs, est.mask), est.params});
    } catch (const CalibError& e) {
      spdlog::warn("extra pair ({}, {}) skipped: {}", ida, idb, e.what());
    }
  }

  if (cfg.joint.enabled && !solved.empty()) {
    JointProblem problem;
    problem.n_sensors = static_cast<int>(solved.size()) + 1;
    problem.metric.push_back(true);
    for (size_t i : solved) {
      problem.metric.push_back(IsMetric(states[i].report.kind));
      problem.initial.push_back(*states[i].report.initial);
      problem.blocks.push_back(
          {0, joint_index[i], InlierPairs(states[i].sync.pairs, states[i].inliers)});
    }
    for (const ExtraPair& e : extras) {
      if (!e.pairs.empty()) {
        problem.blocks.push_back({joint_index[e.a], joint_index[e.b], e.pairs});
      }
    }
    problem.loss = cfg.joint.loss;
    problem.loss_scale = cfg.joint.loss_scale.value_or(cfg.ransac.threshold);
    try {
      const JointResult jr = JointRefine(problem);
      report.joint_ran = true;
      report.joint_termination = jr.termination;
      report.joint_cost_trace = jr.cost_trace;
      for (size_t k = 0; k < solved.size(); ++k) {
        states[solved[k]].report.calibration = jr.params[k];
      }
    } catch (const CalibError& e) {
      report.joint_termination = std::string("failed: ") + e.what();
      spdlog::warn("joint refinement failed, keeping pairwise estimates: {}", e.what());
    }
  }

  for (const ExtraPair& e : extras) {
    const SensorReport& ra = states[e.a].report;
    const SensorReport& rb = states[e.b].report;
    report.loop_consistency.push_back(
        {ra.id, rb.id, CalibrationDistance(RelativeCalibration(*ra.initial, *rb.initial), e.direct),
         CalibrationDistance(RelativeCalibration(*ra.calibration, *rb.calibration), e.direct)});
  }

  // Residual series, metric quantities, overlays.
  for (SensorState& st : states) {
    SensorReport& r = st.report;
    if (r.is_reference) {
      if (r.ground) {
        r.metric_z = RecoverMetricZ(*r.ground, 1.0);
      }
      continue;
    }
    if (!r.ok) {
      continue;
    }
    const Sim2& x = *r.calibration;
    r.lever_x = x.scale() * x.x();
    r.lever_y = x.scale() * x.y();
    if (r.ground) {
      r.metric_z = RecoverMetricZ(*r.ground, x.scale());
    }
    for (size_t k = 0; k < st.sync.pairs.size(); ++k) {
      const MotionPair& p = st.sync.pairs[k];
      r.residuals.push_back({p.k, p.t0, p.t1, TranslationError(*r.initial, p).norm(),
                             TranslationError(x, p).norm(), st.inliers[k]});
    }
    r.rms_before = RmsOverInliers(r.residuals, false);
    r.rms_after = RmsOverInliers(r.residuals, true);
    r.overlay = BuildOverlay(times, ref.planar, st.planar, x);
  }

  for (SensorState& st : states) {
    report.sensors.push_back(std::move(st.report));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Simulation fixtures

json SimConfigToJson(const SimConfig& cfg) {
  json sensors = json::array();
  for (const SimSensor& s : cfg.sensors) {
    sensors.push_back({{"id", s.id},
                       {"kind", SensorKindName(s.kind)},
                       {"extrinsic", Sim2ToJson(s.extrinsic)},
                       {"ground", GroundToJson(s.ground)},
                       {"observes_ground", s.observes_ground}});
  }
  return {{"noise_level", cfg.noise_level},
          {"trans_sigma_base", cfg.trans_sigma_base},
          {"rot_sigma_base", cfg.rot_sigma_base},
          {"depth_sigma_base", cfg.depth_sigma_base},
          {"n_laps", cfg.n_laps},
          {"samples_per_lap", cfg.samples_per_lap},
          {"lobe_radius", cfg.lobe_radius},
          {"sample_period", cfg.sample_period},
          {"camera",
           {{"width", cfg.camera.width},
            {"height", cfg.camera.height},
            {"diagonal_fov", cfg.camera.diagonal_fov}}},
          {"seed", cfg.seed},
          {"sensors", sensors}};
}

SimConfig SimConfigFromJson(const json& j) {
  SimConfig cfg = DefaultSimConfig();
  try {
    cfg.noise_level = j.value("noise_level", cfg.noise_level);
    cfg.trans_sigma_base = j.value("trans_sigma_base", cfg.trans_sigma_base);
    cfg.rot_sigma_base = j.value("rot_sigma_base", cfg.rot_sigma_base);
    cfg.depth_sigma_base = j.value("depth_sigma_base", cfg.depth_sigma_base);
    cfg.n_laps = j.value("n_laps", cfg.n_laps);
    cfg.samples_per_lap = j.value("samples_per_lap", cfg.samples_per_lap);
    cfg.lobe_radius = j.value("lobe_radius", cfg.lobe_radius);
    cfg.sample_period = j.value("sample_period", cfg.sample_period);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("camera")) {
      const json& c = j["camera"];
      cfg.camera.width = c.value("width", cfg.camera.width);
      cfg.camera.height = c.value("height", cfg.camera.height);
      cfg.camera.diagonal_fov = c.value("diagonal_fov", cfg.camera.diagonal_fov);
    }
    if (j.contains("sensors")) {
      cfg.sensors.clear();
      for (const json& s : j["sensors"]) {
        SimSensor sensor;
        sensor.id = s.at("id").get<std::string>();
        sensor.kind = ParseSensorKind(s.at("kind").get<std::string>());
        if (s.contains("extrinsic")) sensor.extrinsic = Sim2FromJson(s["extrinsic"]);
        if (s.contains("ground")) sensor.ground = GroundFromJson(s["ground"]);
        sensor.observes_ground = s.value("observes_ground", IsThreeD(sensor.kind));
        cfg.sensors.push_back(std::move(sensor));
      }
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("malformed simulation config: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

void WriteSimFixture(const SimInstance& inst, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    Fail(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  }
  json sensors = json::array();
  json truth = json::array();
  for (size_t i = 0; i < inst.sensors.size(); ++i) {
    const SimSensor& s = inst.config.sensors[i];
    const SimSensorData& d = inst.sensors[i];
    const std::string traj_name = s.id + "_trajectory.txt";
    json js = {{"id", s.id}, {"kind", SensorKindName(s.kind)}, {"trajectory", traj_name}};
    if (IsThreeD(s.kind)) {
      WriteSixDofTrajectory(dir / traj_name, d.trajectory3);
      if (s.observes_ground) {
        const std::string points_name = s.id + "_ground.txt";
        WritePoints(dir / points_name, d.ground_points);
        js["ground_points"] = points_name;
      }
    } else {
      WritePlanarTrajectory(dir / traj_name, d.trajectory2);
    }
    sensors.push_back(std::move(js));
    json jt = {{"id", s.id}, {"kind", SensorKindName(s.kind)}, {"extrinsic", Sim2ToJson(s.extrinsic)}};
    if (IsThreeD(s.kind)) {
      jt["ground_metric"] = GroundToJson(s.ground);
      jt["ground_scaled"] = GroundToJson(d.ground_scaled);
    }
    truth.push_back(std::move(jt));
  }
  const json config = {{"reference", inst.config.sensors.front().id},
                       {"sensors", sensors},
                       {"ransac", {{"enabled", true}, {"threshold", 0.05}, {"seed", inst.config.seed}}},
                       {"joint", {{"enabled", true}, {"loss", "cauchy"}}},
                       {"output_dir", "output"}};
  auto write_json = [&](const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) Fail(ErrorCode::kIo, "cannot open '" + p.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) Fail(ErrorCode::kIo, "failed writing '" + p.string() + "'");
  };
  write_json(dir / "config.json", config);
  write_json(dir / "ground_truth.json",
             {{"simulation", SimConfigToJson(inst.config)}, {"sensors", truth}});
}

}  // namespace autocalib
