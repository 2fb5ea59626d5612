#pragma once

#include "wxbs/core.hpp"
#include "wxbs/estimator.hpp"
#include "wxbs/matcher.hpp"
#include "wxbs/synth.hpp"

#include <optional>
#include <vector>

namespace wxbs {

struct ModsConfig {
  /// eta = 3 px, the correctness radius of the evaluation protocol.
  static RansacParams default_ransac() {
    RansacParams r;
    r.inlier_threshold = 3.0;
    return r;
  }

  std::vector<StepConfig> steps;
  int theta_m = 15;
  int s_max = 0;  // 0 runs every step
  MatcherParams matcher;
  RansacParams ransac = default_ransac();
  ModelRequest model = ModelRequest::homography;
  double duplicate_radius = 3.0;
  double laf_check_threshold = 0.0;  // 0 uses the RANSAC threshold

  void validate() const;
  int step_limit() const;
};

/// Seven rungs of increasing cost: plain Hessian, tilted Hessian, multi-scale
/// DoG, tilted DoG, then Baumberg-adapted Hessian over denser tilt sets.
std::vector<StepConfig> default_ladder();

/// Config with the default ladder.
ModsConfig default_mods_config();

/// Detection, optional shape adaptation, orientation and description on
/// every synthesized view of one step; frames returned in original-image
/// coordinates with view_id = 1000 * step_id + view index. Views run in
/// parallel and merge in index order.
FeatureSet extract_step_features(const Image& img, const StepConfig& step);

struct StepRecord {
  int step_id = 0;
  double seconds = 0.0;  // wall time, informational only
  int features1 = 0;     // global list sizes after this step
  int features2 = 0;
  int tentatives = 0;
  int ransac_inliers = 0;
  int verified = 0;
};

struct VerifiedMatch {
  Correspondence corr;
  LocalAffineFrame a;
  LocalAffineFrame b;
};

struct MatchResult {
  bool success = false;
  std::optional<TwoViewModel> model;  // best model seen, even on failure
  std::vector<VerifiedMatch> matches;
  int steps_used = 0;
  std::vector<StepRecord> steps;
};

MatchResult run_mods(const Image& img1, const Image& img2, const ModsConfig& cfg);

}  // namespace wxbs
