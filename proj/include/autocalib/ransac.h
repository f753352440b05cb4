#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "autocalib/geometry.h"
#include "autocalib/planar_calib.h"
#include "autocalib/sync.h"

namespace autocalib {

struct RansacConfig {
  double threshold = 0.05;  // reference-sensor length units
  int max_iterations = 1000;
  int min_sample = 2;
  uint64_t seed = 0;
  double confidence = 0.999;

  // Throws kInvalidArgument on out-of-range fields.
  void Validate() const;
};

struct RobustEstimate {
  Sim2 params;
  PairwiseSolution solution;
  std::vector<bool> inlier_mask;
  int iterations_run = 0;
  size_t num_inliers() const;
};

// Translation part of p_i - (x + p_j + (-x)): the discrepancy between the
// observed reference motion and the one predicted from p_j, expressed in the
// reference sensor's (metric) units.
Eigen::Vector2d TranslationError(const Sim2& x, const MotionPair& pair);

// Hypothesize-and-verify around SolvePairwise. Every hypothesis draws its
// sample from an RNG keyed on (seed, hypothesis index), so results depend on
// the seed only. The final estimate is refit on the consensus set until the
// mask is stable. Throws kConsensus when no hypothesis gathers more than
// min_sample inliers, kDegenerate when every sample was degenerate.
RobustEstimate RansacPairwise(std::span<const MotionPair> pairs, const RansacConfig& cfg);

// Inlier classification of all pairs at x: ||TranslationError|| < threshold.
std::vector<bool> ClassifyInliers(const Sim2& x, std::span<const MotionPair> pairs,
                                  double threshold);

}  // namespace autocalib
