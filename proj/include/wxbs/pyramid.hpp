#pragma once

#include "wxbs/core.hpp"
#include "wxbs/kernels.hpp"

#include <vector>

namespace wxbs {

struct DetectorParams {
  double threshold = 0.0;      // response magnitude
  int min_features = 0;        // R_min
  int levels_per_octave = 3;
  double sigma_base = 1.6;
  bool edge_like_allowed = false;
  double edge_ratio = 10.0;
  int max_features = 0;        // 0 = unlimited; strongest kept

  void validate() const;
};

struct ScaleLevel {
  kernels::Plane image;
  double sigma = 0.0;        // absolute, original-image pixels
  double local_sigma = 0.0;  // octave pixels
};

struct Octave {
  int factor = 1;  // downsampling factor w.r.t. the input image
  std::vector<ScaleLevel> levels;
};

struct ScaleSpace {
  int levels_per_octave = 3;
  double sigma_base = 1.6;
  int width = 0;
  int height = 0;
  std::vector<Octave> octaves;

  /// Level with the largest absolute sigma not exceeding `sigma`
  /// (the finest level when none qualifies).
  const ScaleLevel& level_for_sigma(double sigma, int* factor) const;
};

/// Minimum pyramid dimension; smaller octaves are not built.
inline constexpr int kMinOctaveSize = 16;

ScaleSpace build_scale_space(const Image& img, const DetectorParams& params);

/// Similarity-covariant detection in original-image coordinates: A = sigma * I.
/// kind must be hessian or dog (hessian_affine detects as hessian).
std::vector<LocalAffineFrame> detect(const ScaleSpace& ss, DetectorKind kind,
                                     const DetectorParams& params);

/// Features sorted by response (descending). Keeps those >= threshold, or
/// the top `min_features` when fewer pass.
std::vector<LocalAffineFrame> adaptive_threshold(std::vector<LocalAffineFrame> sorted,
                                                 double threshold, int min_features);

/// Patch sampled from the level whose blur matches the sampling step, so
/// coarse patches do not alias.
Patch extract_patch(const ScaleSpace& ss, const LocalAffineFrame& laf, int side, double mag);

/// Deterministic detection order: response desc, then y, then x.
void sort_by_response(std::vector<LocalAffineFrame>& lafs);

}  // namespace wxbs
