#include "wxbs/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wxbs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

void check_dims(int width, int height, size_t n) {
  if (width <= 0 || height <= 0 || static_cast<size_t>(width) * height != n)
    throw std::invalid_argument("image data does not match its dimensions");
}

}  // namespace

Image::Image(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height, data_.size());
  for (float v : data_)
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
      throw std::invalid_argument("image intensities must be finite and within [0,1]");
}

Image Image::filled(int width, int height, float value) {
  return Image(width, height, std::vector<float>(static_cast<size_t>(width) * height, value));
}

Image Image::from_clamped(int width, int height, std::vector<float> data) {
  check_dims(width, height, data.size());
  for (float& v : data) v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
  Image img;
  img.width_ = width;
  img.height_ = height;
  img.data_ = std::move(data);
  return img;
}

float Image::clamped(int x, int y) const {
  return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
}

float Image::bilinear(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1 - fx) * at(x0, y0) + fx * at(x1, y0);
  const double bot = (1 - fx) * at(x0, y1) + fx * at(x1, y1);
  return static_cast<float>((1 - fy) * top + fy * bot);
}

Image to_grayscale(const Image& r, const Image& g, const Image& b) {
  if (r.width() != g.width() || r.width() != b.width() || r.height() != g.height() ||
      r.height() != b.height())
    throw std::invalid_argument("color channels differ in size");
  std::vector<float> out(r.data().size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>((static_cast<double>(r.data()[i]) + g.data()[i] + b.data()[i]) / 3.0);
  return Image::from_clamped(r.width(), r.height(), std::move(out));
}

std::string to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::hessian: return "hessian";
    case DetectorKind::dog: return "dog";
    case DetectorKind::hessian_affine: return "hessian_affine";
  }
  return "unknown";
}

DetectorKind detector_from_string(const std::string& s) {
  if (s == "hessian") return DetectorKind::hessian;
  if (s == "dog") return DetectorKind::dog;
  if (s == "hessian_affine" || s == "hessaff") return DetectorKind::hessian_affine;
  throw std::invalid_argument("unknown detector kind: " + s);
}

bool LocalAffineFrame::valid() const {
  return center.allFinite() && A.allFinite() && A.determinant() > 0.0 && std::isfinite(response);
}

Mat2 rotation(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

AffineDecomposition decompose_affine(const Mat2& A) {
  if (!A.allFinite()) throw std::invalid_argument("affine matrix has non-finite entries");
  if (!(A.determinant() > 0.0)) throw std::invalid_argument("affine matrix must have positive determinant");

  Eigen::JacobiSVD<Mat2> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat2 U = svd.matrixU();
  Mat2 V = svd.matrixV();
  const Vec2 s = svd.singularValues();
  if (U.determinant() < 0) {
    // det(A) > 0 forces det(V) < 0 as well; flipping both second columns
    // leaves U * S * V^T unchanged.
    U.col(1) *= -1.0;
    V.col(1) *= -1.0;
  }

  AffineDecomposition d;
  d.lambda = s(1);
  d.t = s(0) / s(1);
  if (d.t - 1.0 < 1e-12) {
    d.t = 1.0;
    d.phi = 0.0;
    d.psi = wrap_two_pi(std::atan2(A(1, 0), A(0, 0)));
    return d;
  }
  // R(psi) = U, R(phi) = V^T
  double psi = std::atan2(U(1, 0), U(0, 0));
  double phi = std::atan2(-V(1, 0), V(0, 0));
  phi = wrap_two_pi(phi);
  if (phi >= std::numbers::pi) {
    // R(phi) diag(t,1) = (-I) R(phi - pi) diag(t,1), and -I = R(pi).
    phi -= std::numbers::pi;
    psi += std::numbers::pi;
  }
  d.phi = phi;
  d.psi = wrap_two_pi(psi);
  return d;
}

Mat2 compose_affine(const AffineDecomposition& d) {
  if (!(d.lambda > 0.0) || !(d.t >= 1.0) || !std::isfinite(d.psi) || !std::isfinite(d.phi))
    throw std::invalid_argument("invalid affine decomposition");
  Mat2 T = Mat2::Identity();
  T(0, 0) = d.t;
  return d.lambda * rotation(d.psi) * T * rotation(d.phi);
}

Mat2 residual_shape(const Mat2& shape) {
  if (std::abs(shape(0, 1)) > 1e-12) throw std::invalid_argument("shape matrix must be lower triangular");
  if (std::abs(shape.determinant() - 1.0) > 1e-6) throw std::invalid_argument("shape matrix must have unit determinant");
  return shape - Mat2::Identity();
}

Mat2 shape_from_residual(const Mat2& residual) {
  Mat2 shape = residual + Mat2::Identity();
  if (std::abs(shape(0, 1)) > 1e-12) throw std::invalid_argument("residual must be lower triangular");
  if (std::abs(shape.determinant() - 1.0) > 1e-6) throw std::invalid_argument("residual does not give a unit-determinant shape");
  return shape;
}

Mat2 lower_triangular_shape(const Mat2& shape) {
  const Vec2 r0 = shape.row(0).transpose();
  const Vec2 r1 = shape.row(1).transpose();
  const double n0 = r0.norm();
  if (!(n0 > 0)) throw DegenerateError("shape matrix has a zero row");
  Mat2 L;
  L << n0, 0.0, r1.dot(r0) / n0, shape.determinant() / n0;
  return L;
}

Patch::Patch(int side_, std::vector<float> d) : side(side_), data(std::move(d)) {
  if (side <= 0 || data.size() != static_cast<size_t>(side) * side)
    throw std::invalid_argument("patch data does not match its side");
}

Patch extract_patch(const Image& img, const LocalAffineFrame& laf, int side, double mag) {
  if (side < 3) throw std::invalid_argument("patch side must be at least 3");
  if (!laf.valid()) throw std::invalid_argument("invalid local affine frame");
  Eigen::JacobiSVD<Mat2> svd(laf.A);
  const Vec2 s = svd.singularValues();
  if (!(s(1) > 0) || s(0) / s(1) > 1e6) throw DegenerateError("affine frame is degenerate");

  const double c = 0.5 * (side - 1);
  const Mat2 M = (mag / (0.5 * side)) * laf.A;
  std::vector<float> out(static_cast<size_t>(side) * side);
  for (int i = 0; i < side; ++i) {
    const double v = i - c;
    for (int j = 0; j < side; ++j) {
      const double u = j - c;
      const double x = laf.center.x() + M(0, 0) * u + M(0, 1) * v;
      const double y = laf.center.y() + M(1, 0) * u + M(1, 1) * v;
      out[static_cast<size_t>(i) * side + j] = img.bilinear(x, y);
    }
  }
  return Patch(side, std::move(out));
}

Patch photometric_normalize(const Patch& p, NormalizeMode mode) {
  const size_t n = p.data.size();
  double mean = 0.0;
  for (float v : p.data) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (float v : p.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::max(std::sqrt(var), kStdGuard);

  const double target_mean = mode == NormalizeMode::zero_mean_unit_std ? 0.0 : 0.5;
  const double target_sd = mode == NormalizeMode::zero_mean_unit_std ? 1.0 : std::sqrt(0.2);
  std::vector<float> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = static_cast<float>(target_mean + target_sd * (p.data[i] - mean) / sd);
  return Patch(p.side, std::move(out));
}

}  // namespace wxbs
