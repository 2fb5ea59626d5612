#pragma once

#include "wxbs/core.hpp"
#include "wxbs/descriptor.hpp"
#include "wxbs/pyramid.hpp"

#include <vector>

namespace wxbs {

/// Scale S, tilt t and longitude phi (degrees) of one synthesized view.
struct SynthViewSpec {
  double S = 1.0;
  double t = 1.0;
  double phi = 0.0;
  double sigma_base = 0.8;

  void validate() const;
  bool is_identity() const { return S == 1.0 && t == 1.0 && phi == 0.0; }
};

struct SynthView {
  Image image;
  Mat3 A_view = Mat3::Identity();  // original -> synthesized pixel coordinates
  SynthViewSpec spec;
};

/// One rung of the matching ladder: which features to extract and on which
/// synthesized views.
struct StepConfig {
  int step_id = 0;
  DetectorKind detector = DetectorKind::hessian;
  DescriptorKind descriptor = DescriptorKind::rootsift;
  std::vector<double> scales = {1.0};
  std::vector<double> tilts = {1.0};
  double delta_phi_base = 360.0;
  double sigma_base = 0.8;
  DetectorParams detector_params;

  void validate() const;
};

/// Downscale (with pre-blur), rotate about the centre on an expanded
/// canvas, blur anisotropically, shrink horizontally by t.
SynthView synth_view(const Image& img, const SynthViewSpec& spec);

/// Views over {S} x {t}; for t > 1 phi runs over multiples of
/// delta_phi_base / t inside [0, 180), t = 1 gives phi = 0 only.
std::vector<SynthViewSpec> gen_views(const StepConfig& cfg);

/// Maps frames detected in a synthesized view back to the original image.
std::vector<LocalAffineFrame> backproject_lafs(const std::vector<LocalAffineFrame>& lafs, const Mat3& A_view,
                                               int view_id);

}  // namespace wxbs
