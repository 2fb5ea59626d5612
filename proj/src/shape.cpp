#include "wxbs/shape.hpp"

#include "patch_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wxbs {

void BaumbergParams::validate() const {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(max_elongation > 1)) throw std::invalid_argument("max_elongation must exceed 1");
  if (!(convergence_eps > 0)) throw std::invalid_argument("convergence_eps must be positive");
  if (window_side < 5) throw std::invalid_argument("window_side must be at least 5");
  if (!(window_mag > 0)) throw std::invalid_argument("window_mag must be positive");
}

const char* to_string(ShapeStatus s) {
  switch (s) {
    case ShapeStatus::accepted: return "accepted";
    case ShapeStatus::elongated: return "elongated";
    case ShapeStatus::boundary: return "boundary";
    case ShapeStatus::not_converged: return "not_converged";
    case ShapeStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

constexpr double kDerivativeSigma = 1.0;  // patch pixels

// Second-moment matrix of the derivative-smoothed patch under an isotropic
// Gaussian window. Smoothing and window live in the normalized frame, so an
// elliptical Gaussian blob has its fixed point exactly at its own shape.
Mat2 second_moment(const Patch& p) {
  const kernels::Plane smooth = kernels::serial::gaussian_blur(kernels::Plane(p.side, p.side, p.data),
                                                               kDerivativeSigma, kDerivativeSigma);
  const auto g = detail::patch_gradients(smooth.data, p.side);
  const double c = 0.5 * (p.side - 1), sw = p.side / 6.0;
  double a = 0, b = 0, d = 0;
  for (int y = 1; y + 1 < p.side; ++y)
    for (int x = 1; x + 1 < p.side; ++x) {
      const double r2 = (x - c) * (x - c) + (y - c) * (y - c);
      const double w = std::exp(-0.5 * r2 / (sw * sw));
      const size_t i = static_cast<size_t>(y) * p.side + x;
      a += w * g.gx[i] * g.gx[i];
      b += w * g.gx[i] * g.gy[i];
      d += w * g.gy[i] * g.gy[i];
    }
  Mat2 M;
  M << a, b, b, d;
  return M;
}

bool touches_border(const Vec2& c, const Mat2& A, double mag, int w, int h) {
  // Axis-aligned extent of the ellipse c + mag * A * unit circle.
  const double ex = mag * A.row(0).norm(), ey = mag * A.row(1).norm();
  return c.x() - ex < 0 || c.y() - ey < 0 || c.x() + ex > w - 1 || c.y() + ey > h - 1;
}

double elongation(const Mat2& U) {
  Eigen::JacobiSVD<Mat2> svd(U);
  const Vec2 s = svd.singularValues();
  return s(0) / s(1);
}

template <class Sampler>
ShapeResult adapt(const Sampler& sample, int w, int h, const LocalAffineFrame& laf, const BaumbergParams& p) {
  p.validate();
  if (!laf.valid()) throw std::invalid_argument("invalid local affine frame");
  ShapeResult res;
  res.laf = laf;
  const double scale = std::sqrt(laf.A.determinant());
  Mat2 U = laf.A / scale;

  for (int it = 1; it <= p.max_iter; ++it) {
    res.iterations = it;
    LocalAffineFrame cur = laf;
    cur.A = scale * U;
    if (touches_border(cur.center, cur.A, p.window_mag, w, h)) {
      res.status = ShapeStatus::boundary;
      return res;
    }
    const Mat2 M = second_moment(sample(cur, p.window_side, p.window_mag));
    Eigen::SelfAdjointEigenSolver<Mat2> es(M);
    const Vec2 ev = es.eigenvalues();  // ascending
    if (!(ev(0) > 0) || !ev.allFinite()) {
      res.status = ShapeStatus::degenerate;
      return res;
    }
    const bool converged = 1.0 - ev(0) / ev(1) <= p.convergence_eps;
    const Mat2 inv_sqrt = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                          es.eigenvectors().transpose();
    U = U * inv_sqrt;
    U /= std::sqrt(U.determinant());
    if (elongation(U) > p.max_elongation) {
      res.status = ShapeStatus::elongated;
      return res;
    }
    if (converged) {
      res.laf.A = scale * lower_triangular_shape(U);
      res.laf.detector = DetectorKind::hessian_affine;
      res.status = touches_border(res.laf.center, res.laf.A, p.window_mag, w, h) ? ShapeStatus::boundary
                                                                                 : ShapeStatus::accepted;
      return res;
    }
  }
  res.status = ShapeStatus::not_converged;
  return res;
}

}  // namespace

ShapeResult baumberg_adapt(const Image& img, const LocalAffineFrame& laf, const BaumbergParams& p) {
  auto sample = [&](const LocalAffineFrame& f, int side, double mag) { return extract_patch(img, f, side, mag); };
  return adapt(sample, img.width(), img.height(), laf, p);
}

ShapeResult baumberg_adapt(const ScaleSpace& ss, const LocalAffineFrame& laf, const BaumbergParams& p) {
  auto sample = [&](const LocalAffineFrame& f, int side, double mag) { return extract_patch(ss, f, side, mag); };
  return adapt(sample, ss.width, ss.height, laf, p);
}

std::vector<double> dominant_orientation(const Patch& p) {
  if (p.side < 9) throw std::invalid_argument("orientation patch must be at least 9 pixels");
  constexpr int nb = kOrientationBins;
  constexpr double two_pi = 2 * std::numbers::pi;
  const auto g = detail::patch_gradients(p);
  const double c = 0.5 * (p.side - 1), sw = p.side / 6.0;
  std::array<double, nb> hist{};
  for (int y = 0; y < p.side; ++y)
    for (int x = 0; x < p.side; ++x) {
      const size_t i = static_cast<size_t>(y) * p.side + x;
      const double m = std::hypot(g.gx[i], g.gy[i]);
      if (m == 0) continue;
      const double r2 = (x - c) * (x - c) + (y - c) * (y - c);
      double a = std::atan2(g.gy[i], g.gx[i]);
      if (a < 0) a += two_pi;
      const double fb = a / two_pi * nb;
      const int b0 = static_cast<int>(std::floor(fb));
      const double frac = fb - b0;
      const double wm = m * std::exp(-0.5 * r2 / (sw * sw));
      hist[((b0 % nb) + nb) % nb] += wm * (1 - frac);
      hist[(b0 + 1) % nb] += wm * frac;
    }
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, nb> s{};
    for (int k = 0; k < nb; ++k) s[k] = 0.25 * hist[(k + nb - 1) % nb] + 0.5 * hist[k] + 0.25 * hist[(k + 1) % nb];
    hist = s;
  }
  const double peak = *std::max_element(hist.begin(), hist.end());
  if (!(peak > 1e-12)) return {0.0};

  std::vector<std::pair<double, double>> peaks;  // (value, angle)
  for (int k = 0; k < nb; ++k) {
    const double l = hist[(k + nb - 1) % nb], v = hist[k], r = hist[(k + 1) % nb];
    if (!(v > l && v >= r) || v < kOrientationPeakRatio * peak) continue;
    const double den = l - 2 * v + r;
    const double off = den != 0 ? 0.5 * (l - r) / den : 0.0;
    double a = (k + off) * two_pi / nb;
    a = std::fmod(a + two_pi, two_pi);
    if (a >= two_pi) a = 0;
    peaks.emplace_back(v, a);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (peaks.size() > static_cast<size_t>(kMaxOrientations)) peaks.resize(kMaxOrientations);
  std::vector<double> out;
  for (const auto& pk : peaks) out.push_back(pk.second);
  if (out.empty()) out.push_back(0.0);
  return out;
}

std::vector<LocalAffineFrame> oriented_frames(const ScaleSpace& ss, const LocalAffineFrame& laf) {
  const Patch p = extract_patch(ss, laf, 32, 3 * std::sqrt(3.0));
  std::vector<LocalAffineFrame> out;
  for (double a : dominant_orientation(p)) {
    LocalAffineFrame f = laf;
    f.A = laf.A * rotation(a);
    out.push_back(f);
  }
  return out;
}

}  // namespace wxbs
