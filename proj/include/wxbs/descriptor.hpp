#pragma once

#include "wxbs/core.hpp"
#include "wxbs/pyramid.hpp"

#include <string>
#include <vector>

namespace wxbs {

enum class DescriptorKind { sift, rootsift, halfsift, pixels };

std::string to_string(DescriptorKind k);
DescriptorKind descriptor_from_string(const std::string& s);

int descriptor_dim(DescriptorKind k);
/// Side of the normalized patch each kind is computed on.
int descriptor_patch_side(DescriptorKind k);

/// Measurement region radius in units of the frame scale (41x41 patch
/// convention, sigma = 3 sqrt 3).
inline const double kDescriptorMag = 3.0 * 1.7320508075688772;
inline constexpr float kSiftClip = 0.2f;

struct Descriptor {
  std::vector<float> values;
  DescriptorKind kind = DescriptorKind::sift;
  bool normalized = false;
  bool zero_guard = false;  // input had no signal; values are all zero
};

/// Throws std::invalid_argument for patches too small for the kind.
Descriptor describe(const Patch& p, DescriptorKind kind);

/// L1 normalization, element-wise square root, L2 normalization.
Descriptor rootsift_from_sift(const Descriptor& sift);

/// Descriptors of frames sampled from the pyramid; parallel over frames.
std::vector<Descriptor> describe_frames(const ScaleSpace& ss, const std::vector<LocalAffineFrame>& lafs,
                                        DescriptorKind kind);

}  // namespace wxbs
