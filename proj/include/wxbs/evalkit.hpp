#pragma once

#include "wxbs/core.hpp"
#include "wxbs/estimator.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wxbs::eval {

struct GtModel {
  ModelKind kind = ModelKind::homography;
  Mat3 M = Mat3::Identity();
};

struct GtCorrespondenceSet {
  std::vector<PointPair> pairs;
  std::optional<GtModel> model;
  std::string scene;
  std::string category;

  /// Non-empty; with positive dims, every point inside its image.
  void validate(int w1 = 0, int h1 = 0, int w2 = 0, int h2 = 0) const;
};

/// r(theta) = |{e < theta}| / |C| with the model's pixel error.
std::vector<double> recall_curve(const GtCorrespondenceSet& gt, ModelKind kind, const Mat3& M,
                                 const std::vector<double>& thetas);

/// Per-category recall: mean of per-pair curves.
std::vector<double> category_recall(const std::vector<std::vector<double>>& per_pair);

/// max(rotation angle of R_est^T R_gt, angle between t_est and t_gt), degrees.
double pose_error(const Mat3& R_est, const Vec3& t_est, const Mat3& R_gt, const Vec3& t_gt);

/// Mean over t = step, 2 step, ..., max_thr of the fraction of errors <= t.
/// Non-finite errors never pass.
double maa(const std::vector<double>& errors, double max_thr, double step = 1.0);

struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::UnitX();  // unit length
};

/// Essential decomposition of K2^T F K1 disambiguated by cheirality.
/// Convention: P1 = K1 [I|0], P2 = K2 [R|t], v^T F u = 0.
Pose pose_from_fundamental(const Mat3& F, const Mat3& K1, const Mat3& K2, const std::vector<PointPair>& corrs);

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// min over both images of bbox(shared points) area / image area.
double covisibility(const std::vector<Vec2>& shared1, const std::vector<Vec2>& shared2, ImageSize dims1,
                    ImageSize dims2);

struct RepeatabilityResult {
  double repeatability = 0.0;
  double matching_score = 0.0;
  int repeated = 0;
  int correct_matches = 0;
  int projectable = 0;  // the smaller of the two projectable counts
};

/// Greedy one-to-one pairing by transfer distance under H, threshold inclusive.
RepeatabilityResult repeatability_and_ms(const std::vector<LocalAffineFrame>& lafs1,
                                         const std::vector<LocalAffineFrame>& lafs2, const Mat3& H,
                                         ImageSize dims1, ImageSize dims2, double pixel_thr,
                                         const std::vector<std::pair<int, int>>& matches);

struct VerdictParams {
  double correct_px = 3.0;
  int solved_min = 10;
  double median_px = 6.0;
};

struct Verdict {
  int total = 0;
  int correct = 0;
  bool solved = false;
  double median_error = 0.0;
  bool median_ok = false;
};

/// Judges an output correspondence set against a ground-truth model.
Verdict pair_verdicts(const std::vector<PointPair>& output, const GtModel& gt, const VerdictParams& p = {});

struct CameraIntrinsics {
  double f = 1.0;     // focal length, sensor units
  double fr_x = 1.0;  // focal plane resolution
  double fr_y = 1.0;
  double m = 1.0;     // sensor pixels
  double n = 1.0;

  void validate() const;
  Mat3 matrix() const;
};

struct TurntableCameras {
  Mat3 K;
  Mat3 R;
  Vec3 t;
};

/// R, t and K of the turntable rig; the object centre sits at (0, 0, r).
TurntableCameras turntable_cameras(const CameraIntrinsics& K, double phi_deg, double r);

/// F = K^-T R K^T [K R^T t]_x, Frobenius-normalized.
Mat3 turntable_gt_F(const CameraIntrinsics& K, double phi_deg, double r);

}  // namespace wxbs::eval
