#include "autocalib/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "autocalib/error.h"

namespace autocalib {

namespace {

constexpr double kQuaternionNormTolerance = 1e-3;

struct Line {
  size_t number = 0;
  std::vector<double> values;
};

[[noreturn]] void ParseFail(ErrorCode code, const std::string& source, size_t line,
                            const std::string& what) {
  Fail(code, source + ":" + std::to_string(line) + ": " + what);
}

// Splits on whitespace and commas; skips blank and '#' lines.
std::vector<Line> Tokenize(std::istream& in, const std::string& source) {
  std::vector<Line> lines;
  std::string text;
  size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    const size_t first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') {
      continue;
    }
    Line line{number, {}};
    size_t pos = first;
    while (pos < text.size()) {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == ',' ||
                                   text[pos] == '\r')) {
        ++pos;
      }
      if (pos >= text.size()) {
        break;
      }
      size_t end = pos;
      while (end < text.size() && text[end] != ' ' && text[end] != '\t' && text[end] != ',' &&
             text[end] != '\r') {
        ++end;
      }
      double value = 0.0;
      const char* begin = text.data() + pos;
      const char* stop = text.data() + end;
      // from_chars rejects a leading '+'.
      if (*begin == '+') {
        ++begin;
      }
      const auto [ptr, ec] = std::from_chars(begin, stop, value);
      if (ec != std::errc() || ptr != stop || !std::isfinite(value)) {
        ParseFail(ErrorCode::kParse, source, number,
                  "cannot parse '" + text.substr(pos, end - pos) + "' as a number");
      }
      line.values.push_back(value);
      pos = end;
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

void CheckTimestamp(const std::string& source, size_t line, double prev, double t, bool first) {
  if (!first && !(t > prev)) {
    ParseFail(ErrorCode::kData, source, line, "timestamps must be strictly increasing");
  }
}

std::ifstream OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    Fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  }
  return in;
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    Fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
  return out;
}

void CheckWritten(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) {
    Fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
  }
}

}  // namespace

std::string FormatDouble(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Trajectory2 ReadPlanarTrajectory(std::istream& in, const std::string& source) {
  std::vector<TimedPose2> samples;
  for (const Line& line : Tokenize(in, source)) {
    if (line.values.size() != 4) {
      ParseFail(ErrorCode::kParse, source, line.number,
                "expected 't x y theta', got " + std::to_string(line.values.size()) + " fields");
    }
    const double t = line.values[0];
    CheckTimestamp(source, line.number, samples.empty() ? 0.0 : samples.back().t, t,
                   samples.empty());
    samples.push_back({t, Pose2(line.values[1], line.values[2], line.values[3])});
  }
  return Trajectory2(std::move(samples));
}

std::vector<TimedPose3> ReadSixDofTrajectory(std::istream& in, const std::string& source) {
  std::vector<TimedPose3> poses;
  for (const Line& line : Tokenize(in, source)) {
    const auto& v = line.values;
    if (v.size() != 8) {
      ParseFail(ErrorCode::kParse, source, line.number,
                "expected 't tx ty tz qx qy qz qw', got " + std::to_string(v.size()) + " fields");
    }
    CheckTimestamp(source, line.number, poses.empty() ? 0.0 : poses.back().t, v[0],
                   poses.empty());
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (std::abs(q.norm() - 1.0) > kQuaternionNormTolerance) {
      ParseFail(ErrorCode::kData, source, line.number, "quaternion is not unit length");
    }
    q.normalize();
    poses.push_back({v[0], Pose3(q.toRotationMatrix(), Eigen::Vector3d(v[1], v[2], v[3]))});
  }
  return poses;
}

std::vector<WeightedPoint3> ReadPoints(std::istream& in, const std::string& source) {
  std::vector<WeightedPoint3> points;
  for (const Line& line : Tokenize(in, source)) {
    const auto& v = line.values;
    if (v.size() != 3 && v.size() != 4) {
      ParseFail(ErrorCode::kParse, source, line.number,
                "expected 'x y z [w]', got " + std::to_string(v.size()) + " fields");
    }
    const double w = v.size() == 4 ? v[3] : 1.0;
    if (!(w > 0.0)) {
      ParseFail(ErrorCode::kData, source, line.number, "point weight must be positive");
    }
    points.push_back({Eigen::Vector3d(v[0], v[1], v[2]), w});
  }
  return points;
}

Trajectory2 LoadPlanarTrajectory(const std::filesystem::path& path) {
  std::ifstream in = OpenInput(path);
  return ReadPlanarTrajectory(in, path.string());
}

std::vector<TimedPose3> LoadSixDofTrajectory(const std::filesystem::path& path) {
  std::ifstream in = OpenInput(path);
  return ReadSixDofTrajectory(in, path.string());
}

std::vector<WeightedPoint3> LoadPoints(const std::filesystem::path& path) {
  std::ifstream in = OpenInput(path);
  return ReadPoints(in, path.string());
}

void WritePlanarTrajectory(const std::filesystem::path& path, const Trajectory2& traj) {
  std::ofstream out = OpenOutput(path);
  out << "# t x y theta\n";
  for (const TimedPose2& s : traj.samples()) {
    out << FormatDouble(s.t) << ' ' << FormatDouble(s.pose.x()) << ' '
        << FormatDouble(s.pose.y()) << ' ' << FormatDouble(s.pose.theta()) << '\n';
  }
  CheckWritten(out, path);
}

void WriteSixDofTrajectory(const std::filesystem::path& path, std::span<const TimedPose3> traj) {
  std::ofstream out = OpenOutput(path);
  out << "# t tx ty tz qx qy qz qw\n";
  for (const TimedPose3& s : traj) {
    const Eigen::Quaterniond q(s.pose.rotation);
    const Eigen::Vector3d& t = s.pose.translation;
    out << FormatDouble(s.t) << ' ' << FormatDouble(t.x()) << ' ' << FormatDouble(t.y()) << ' '
        << FormatDouble(t.z()) << ' ' << FormatDouble(q.x()) << ' ' << FormatDouble(q.y()) << ' '
        << FormatDouble(q.z()) << ' ' << FormatDouble(q.w()) << '\n';
  }
  CheckWritten(out, path);
}

void WritePoints(const std::filesystem::path& path, std::span<const WeightedPoint3> points) {
  std::ofstream out = OpenOutput(path);
  out << "# x y z w\n";
  for (const WeightedPoint3& p : points) {
    out << FormatDouble(p.m.x()) << ' ' << FormatDouble(p.m.y()) << ' ' << FormatDouble(p.m.z())
        << ' ' << FormatDouble(p.w) << '\n';
  }
  CheckWritten(out, path);
}

}  // namespace autocalib
