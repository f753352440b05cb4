#include "autocalib/ransac.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "autocalib/error.h"
#include "autocalib/random.h"

namespace autocalib {

namespace {

constexpr int kDegenerateRetryFactor = 10;
constexpr int kMaxRefits = 20;

std::vector<MotionPair> Select(std::span<const MotionPair> pairs, const std::vector<bool>& mask) {
  std::vector<MotionPair> out;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (mask[i]) {
      out.push_back(pairs[i]);
    }
  }
  return out;
}

size_t CountTrue(const std::vector<bool>& mask) {
  return static_cast<size_t>(std::count(mask.begin(), mask.end(), true));
}

int AdaptiveIterations(double inlier_ratio, int sample_size, double confidence,
                       int max_iterations) {
  const double all_inliers = std::pow(inlier_ratio, sample_size);
  if (all_inliers >= 1.0) {
    return 1;
  }
  if (all_inliers <= 0.0) {
    return max_iterations;
  }
  const double n = std::log(1.0 - confidence) / std::log(1.0 - all_inliers);
  if (!std::isfinite(n) || n >= max_iterations) {
    return max_iterations;
  }
  return std::max(1, static_cast<int>(std::ceil(n)));
}

}  // namespace

void RansacConfig::Validate() const {
  if (!(threshold > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "RANSAC threshold must be positive");
  }
  if (max_iterations < 1) {
    Fail(ErrorCode::kInvalidArgument, "RANSAC needs at least one iteration");
  }
  if (min_sample < 2) {
    Fail(ErrorCode::kInvalidArgument, "RANSAC minimal sample is at least two pairs");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "RANSAC confidence must lie in (0, 1)");
  }
}

size_t RobustEstimate::num_inliers() const { return CountTrue(inlier_mask); }

Eigen::Vector2d TranslationError(const Sim2& x, const MotionPair& pair) {
  const Sim2 predicted = Compose(Compose(x, pair.p_j.ToSim2()), Inverse(x));
  return pair.p_i.translation() - predicted.translation();
}

std::vector<bool> ClassifyInliers(const Sim2& x, std::span<const MotionPair> pairs,
                                  double threshold) {
  std::vector<bool> mask(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    mask[i] = TranslationError(x, pairs[i]).norm() < threshold;
  }
  return mask;
}

RobustEstimate RansacPairwise(std::span<const MotionPair> pairs, const RansacConfig& cfg) {
  cfg.Validate();
  const size_t n = pairs.size();
  const size_t sample_size = static_cast<size_t>(cfg.min_sample);
  if (n < sample_size) {
    Fail(ErrorCode::kInsufficientData, "fewer motion pairs than the RANSAC sample size");
  }

  std::vector<bool> best_mask;
  size_t best_count = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  bool any_hypothesis = false;

  int needed = cfg.max_iterations;
  int iterations = 0;
  const long max_attempts = static_cast<long>(kDegenerateRetryFactor) * cfg.max_iterations;
  std::vector<size_t> indices(n);
  std::vector<MotionPair> sample(sample_size);

  for (long attempt = 0; iterations < needed && attempt < max_attempts; ++attempt) {
    std::mt19937_64 rng(StreamSeed(cfg.seed, {static_cast<uint64_t>(attempt)}));
    // Partial Fisher-Yates over a fresh index list.
    for (size_t i = 0; i < n; ++i) {
      indices[i] = i;
    }
    for (size_t i = 0; i < sample_size; ++i) {
      std::uniform_int_distribution<size_t> pick(i, n - 1);
      std::swap(indices[i], indices[pick(rng)]);
      sample[i] = pairs[indices[i]];
    }

    Sim2 hypothesis;
    try {
      hypothesis = SolvePairwise(sample).params;
    } catch (const CalibError& e) {
      if (e.code() == ErrorCode::kDegenerate || e.code() == ErrorCode::kScaleSign ||
          e.code() == ErrorCode::kConditioning) {
        continue;
      }
      throw;
    }
    ++iterations;
    any_hypothesis = true;

    std::vector<bool> mask(n);
    size_t count = 0;
    double residual = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double err = TranslationError(hypothesis, pairs[i]).norm();
      if (err < cfg.threshold) {
        mask[i] = true;
        ++count;
        residual += err;
      }
    }
    if (count > best_count || (count == best_count && residual < best_residual)) {
      best_count = count;
      best_residual = residual;
      best_mask = std::move(mask);
      needed = std::min(cfg.max_iterations,
                        AdaptiveIterations(static_cast<double>(count) / static_cast<double>(n),
                                           cfg.min_sample, cfg.confidence, cfg.max_iterations));
    }
  }

  if (!any_hypothesis) {
    Fail(ErrorCode::kDegenerate, "every RANSAC sample was degenerate");
  }
  if (best_count < sample_size + 1) {
    Fail(ErrorCode::kConsensus, "no hypothesis reached " + std::to_string(sample_size + 1) +
                                    " inliers at threshold " + std::to_string(cfg.threshold));
  }

  RobustEstimate est;
  est.iterations_run = iterations;
  std::vector<bool> mask = best_mask;
  for (int refit = 0; refit < kMaxRefits; ++refit) {
    const std::vector<MotionPair> inliers = Select(pairs, mask);
    est.solution = SolvePairwise(inliers);
    std::vector<bool> next = ClassifyInliers(est.solution.params, pairs, cfg.threshold);
    const bool stable = next == mask;
    mask = std::move(next);
    if (stable || CountTrue(mask) < sample_size + 1) {
      break;
    }
  }
  est.params = est.solution.params;
  est.inlier_mask = std::move(mask);
  if (est.num_inliers() < sample_size + 1) {
    Fail(ErrorCode::kConsensus, "refit consensus set fell below the minimum size");
  }
  return est;
}

}  // namespace autocalib
