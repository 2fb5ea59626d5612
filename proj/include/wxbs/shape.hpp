#pragma once

#include "wxbs/core.hpp"
#include "wxbs/pyramid.hpp"

#include <vector>

namespace wxbs {

struct BaumbergParams {
  int max_iter = 16;
  double convergence_eps = 0.05;  // on 1 - lambda_min / lambda_max
  double max_elongation = 6.0;
  int window_side = 19;           // second-moment patch
  double window_mag = 3.0;        // patch radius in units of the frame scale

  void validate() const;
};

enum class ShapeStatus { accepted, elongated, boundary, not_converged, degenerate };

const char* to_string(ShapeStatus s);

struct ShapeResult {
  ShapeStatus status = ShapeStatus::degenerate;
  LocalAffineFrame laf;  // A = scale * lower-triangular det-1 shape when accepted
  int iterations = 0;

  bool accepted() const { return status == ShapeStatus::accepted; }
};

/// Baumberg iteration on the raw image. The frame's scale sqrt(det A) is kept.
ShapeResult baumberg_adapt(const Image& img, const LocalAffineFrame& laf, const BaumbergParams& p);
/// Same, sampling each patch from the pyramid level matching its step.
ShapeResult baumberg_adapt(const ScaleSpace& ss, const LocalAffineFrame& laf, const BaumbergParams& p);

/// Peaks of the 36-bin gradient orientation histogram, strongest first,
/// in [0, 2pi). Returns {0} when the patch has no gradient.
std::vector<double> dominant_orientation(const Patch& p);

/// One frame per dominant orientation: A' = A * R(theta).
std::vector<LocalAffineFrame> oriented_frames(const ScaleSpace& ss, const LocalAffineFrame& laf);

inline constexpr int kOrientationBins = 36;
inline constexpr int kMaxOrientations = 4;
inline constexpr double kOrientationPeakRatio = 0.8;

}  // namespace wxbs
