// Command line front end: run | simulate | check.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "autocalib/error.h"
#include "autocalib/pipeline.h"
#include "autocalib/simulation.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSensorFailed = 2;

void ConfigureLogging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("AUTOCALIB_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

int Run(const std::string& config_path, const std::string& output_override) {
  autocalib::PipelineConfig cfg = autocalib::LoadPipelineConfig(config_path);
  if (!output_override.empty()) {
    cfg.output_dir = output_override;
  }
  const autocalib::CalibrationReport report = autocalib::RunPipeline(cfg);
  autocalib::WriteReport(report, cfg.output_dir);
  for (const autocalib::SensorReport& s : report.sensors) {
    if (s.is_reference) {
      continue;
    }
    if (!s.ok) {
      std::cout << s.id << ": FAILED (" << s.error << ")\n";
      continue;
    }
    const autocalib::Sim2& x = *s.calibration;
    std::cout << s.id << ": x=" << x.x() << " y=" << x.y() << " theta=" << x.theta()
              << " scale=" << x.scale() << " inliers=" << s.n_inliers << "/" << s.n_pairs;
    if (s.metric_z) {
      std::cout << " z=" << *s.metric_z;
    }
    std::cout << '\n';
  }
  std::cout << "report written to " << cfg.output_dir.string() << '\n';
  return report.AnySensorFailed() ? kExitSensorFailed : kExitOk;
}

int Simulate(const std::string& sim_config_path, const std::string& out_dir) {
  autocalib::SimConfig sim = autocalib::DefaultSimConfig();
  if (!sim_config_path.empty()) {
    std::ifstream in(sim_config_path);
    if (!in) {
      autocalib::Fail(autocalib::ErrorCode::kIo, "cannot open '" + sim_config_path + "'");
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      autocalib::Fail(autocalib::ErrorCode::kParse, sim_config_path + ": " + e.what());
    }
    sim = autocalib::SimConfigFromJson(j);
  }
  autocalib::WriteSimFixture(autocalib::GenerateInstance(sim), out_dir);
  std::cout << "fixture written to " << out_dir << '\n';
  return kExitOk;
}

int Check(const std::string& config_path) {
  const autocalib::PipelineConfig cfg = autocalib::LoadPipelineConfig(config_path);
  cfg.Validate();
  for (const autocalib::SensorConfig& s : cfg.sensors) {
    if (!std::filesystem::exists(s.trajectory)) {
      autocalib::Fail(autocalib::ErrorCode::kIo, "missing trajectory '" + s.trajectory.string() + "'");
    }
    if (s.ground_points && !std::filesystem::exists(*s.ground_points)) {
      autocalib::Fail(autocalib::ErrorCode::kIo,
                      "missing ground points '" + s.ground_points->string() + "'");
    }
  }
  std::cout << "config OK: " << cfg.sensors.size() << " sensors, reference '" << cfg.reference
            << "'\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  ConfigureLogging();
  CLI::App app{"Motion-based extrinsic calibration of planar robot sensors"};
  app.set_version_flag("--version", std::string(autocalib::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  CLI::App* run = app.add_subcommand("run", "Calibrate all sensors listed in a config file");
  run->add_option("config", config_path, "Pipeline config (JSON)")->required();
  run->add_option("-o,--output", output_dir, "Override the configured output directory");

  std::string sim_config;
  std::string fixture_dir = "sim_fixture";
  CLI::App* simulate = app.add_subcommand("simulate", "Write a simulated fixture");
  simulate->add_option("sim-config", sim_config, "Simulation config (JSON); defaults if omitted");
  simulate->add_option("-o,--output", fixture_dir, "Fixture directory");

  CLI::App* check = app.add_subcommand("check", "Parse and validate a config file");
  check->add_option("config", config_path, "Pipeline config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run) return Run(config_path, output_dir);
    if (*simulate) return Simulate(sim_config, fixture_dir);
    if (*check) return Check(config_path);
  } catch (const autocalib::CalibError& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kExitError;
  }
  return kExitError;
}
