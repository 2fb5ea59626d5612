#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wxbs {

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Raised when a geometric configuration cannot produce a valid result
/// (collinear samples, singular warps, degenerate shapes).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grayscale raster, row-major, intensities in [0,1].
class Image {
 public:
  Image() = default;
  /// Validates size and range; throws std::invalid_argument otherwise.
  Image(int width, int height, std::vector<float> data);

  static Image filled(int width, int height, float value);
  /// For kernel outputs that are convex combinations of valid pixels.
  /// Values are clamped into [0,1] instead of validated.
  static Image from_clamped(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  const std::vector<float>& data() const { return data_; }

  float at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  /// Border-replicated pixel access.
  float clamped(int x, int y) const;
  /// Bilinear sample with border replication.
  float bilinear(double x, double y) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Channel-averaging grayscale conversion.
Image to_grayscale(const Image& r, const Image& g, const Image& b);

enum class DetectorKind { hessian, dog, hessian_affine };

std::string to_string(DetectorKind k);
DetectorKind detector_from_string(const std::string& s);

/// Keypoint center plus a 2x2 matrix mapping the unit circle to the
/// measurement ellipse (pixels). Orientation is carried by the matrix.
struct LocalAffineFrame {
  Vec2 center = Vec2::Zero();
  Mat2 A = Mat2::Identity();
  double response = 0.0;
  int view_id = 0;
  DetectorKind detector = DetectorKind::hessian;

  bool valid() const;
};

/// A = lambda * R(psi) * diag(t, 1) * R(phi)
struct AffineDecomposition {
  double lambda = 1.0;
  double psi = 0.0;  // [0, 2pi)
  double t = 1.0;    // >= 1
  double phi = 0.0;  // [0, pi)
};

Mat2 rotation(double angle);

AffineDecomposition decompose_affine(const Mat2& A);
Mat2 compose_affine(const AffineDecomposition& d);

/// A'' = A' - I for a lower-triangular, unit-determinant shape matrix.
Mat2 residual_shape(const Mat2& shape);
Mat2 shape_from_residual(const Mat2& residual);

/// Rotation-free canonical form of a det-1 shape: lower triangular with
/// positive diagonal, such that shape = lower * R for some rotation R.
Mat2 lower_triangular_shape(const Mat2& shape);

struct Patch {
  int side = 0;
  std::vector<float> data;

  Patch() = default;
  Patch(int side, std::vector<float> data);

  float at(int x, int y) const { return data[static_cast<size_t>(y) * side + x]; }
};

/// Samples img at center + (mag / (side/2)) * A * u, where u runs over the
/// patch grid centered at (side-1)/2. Bilinear, border replicated.
Patch extract_patch(const Image& img, const LocalAffineFrame& laf, int side, double mag);

enum class NormalizeMode { zero_mean_unit_std, mean05_var02 };

Patch photometric_normalize(const Patch& p, NormalizeMode mode);

inline constexpr double kStdGuard = 1e-8;

}  // namespace wxbs
