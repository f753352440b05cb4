#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "autocalib/ground_align.h"
#include "autocalib/sync.h"

namespace autocalib {

// Text formats, one sample per line, '#' starts a comment line:
//   planar   "t x y theta"
//   six_dof  "t tx ty tz qx qy qz qw"  (Hamilton quaternion, w last)
//   points   "x y z [w]"                (comma or whitespace separated)
// Parse errors carry "<source>:<line>" in their message.

Trajectory2 ReadPlanarTrajectory(std::istream& in, const std::string& source);
std::vector<TimedPose3> ReadSixDofTrajectory(std::istream& in, const std::string& source);
std::vector<WeightedPoint3> ReadPoints(std::istream& in, const std::string& source);

Trajectory2 LoadPlanarTrajectory(const std::filesystem::path& path);
std::vector<TimedPose3> LoadSixDofTrajectory(const std::filesystem::path& path);
std::vector<WeightedPoint3> LoadPoints(const std::filesystem::path& path);

void WritePlanarTrajectory(const std::filesystem::path& path, const Trajectory2& traj);
void WriteSixDofTrajectory(const std::filesystem::path& path, std::span<const TimedPose3> traj);
void WritePoints(const std::filesystem::path& path, std::span<const WeightedPoint3> points);

// Shortest round-trip decimal representation of a double.
std::string FormatDouble(double value);

}  // namespace autocalib
