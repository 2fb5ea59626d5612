#pragma once

#include "wxbs/core.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wxbs {

struct PointPair {
  Vec2 u = Vec2::Zero();  // image 1
  Vec2 v = Vec2::Zero();  // image 2
};

enum class ModelKind { homography, fundamental };
/// What the caller asks for; auto_select lets the estimator choose.
enum class ModelRequest { homography, fundamental, auto_select };

std::string to_string(ModelKind k);
std::string to_string(ModelRequest r);
ModelRequest model_request_from_string(const std::string& s);

struct TwoViewModel {
  ModelKind kind = ModelKind::homography;
  Mat3 M = Mat3::Identity();
  std::vector<int> inliers;
  double score = 0.0;
  int iterations = 0;
};

/// Raised when no hypothesis gathers more than minimal support.
class NoModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RansacParams {
  double inlier_threshold = 2.0;  // eta, pixels
  double confidence = 0.99;
  int max_iter = 10000;           // Gamma
  bool lo_enabled = true;
  std::uint64_t seed = 0;
  double degeneracy_fraction = 0.6;  // H-consistent share that triggers plane-and-parallax
  double auto_h_fraction = 0.9;      // H-consistent share of F-inliers that selects H

  void validate() const;
};

enum class FundamentalAlgo { seven_point, eight_point };
enum class ResidualKind { symmetric_epipolar, sampson, symmetric_transfer };

/// Normalized DLT; exact on noise-free minimal input. Frobenius norm 1,
/// largest-magnitude entry positive. Throws DegenerateError on collinear
/// minimal samples or rank-deficient systems.
Mat3 homography_dlt(const std::vector<PointPair>& pairs);

/// 7 pairs -> up to three rank-2 solutions; >= 8 pairs -> one
/// least-squares solution with rank 2 enforced. Frobenius norm 1.
std::vector<Mat3> fundamental_solve(const std::vector<PointPair>& pairs, FundamentalAlgo algo);

/// symmetric_epipolar: (v'Fu)^2 (1/|Fu|_12^2 + 1/|F'v|_12^2), squared pixels.
/// sampson: first-order geometric error, squared pixels.
/// symmetric_transfer: (|v - Hu| + |u - H^-1 v|) / 2, pixels.
double residual(ModelKind kind, const Mat3& M, const Vec2& u, const Vec2& v, ResidualKind rk);

/// Pixel error used for thresholding: symmetric transfer for H,
/// sqrt(symmetric_epipolar / 2) for F.
double model_error(ModelKind kind, const Mat3& M, const Vec2& u, const Vec2& v);

int minimal_sample_size(ModelKind kind);

/// LO-RANSAC with threshold-annealed least-squares local optimization,
/// plane-and-parallax recovery for dominant planes and model auto-selection.
/// Deterministic given the seed.
TwoViewModel loransac(const std::vector<PointPair>& pairs, ModelRequest request, const RansacParams& p);

struct LafPair {
  LocalAffineFrame a;
  LocalAffineFrame b;
};

/// Indices of `inliers` whose centre and both ellipse-axis points (right
/// singular vectors of A_a pushed through both frames) satisfy the model.
std::vector<int> laf_check(ModelKind kind, const Mat3& M, const std::vector<LafPair>& lafs,
                           const std::vector<int>& inliers, double threshold);

}  // namespace wxbs
