#include "wxbs/synth.hpp"

#include "wxbs/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wxbs {

void SynthViewSpec::validate() const {
  if (!(S > 0 && S <= 1)) throw std::invalid_argument("view scale must be in (0, 1]");
  if (!(t >= 1)) throw std::invalid_argument("tilt must be at least 1");
  if (!(phi >= 0 && phi < 180)) throw std::invalid_argument("longitude must be in [0, 180)");
  if (!(sigma_base > 0)) throw std::invalid_argument("sigma_base must be positive");
}

void StepConfig::validate() const {
  if (scales.empty() || tilts.empty()) throw std::invalid_argument("step needs at least one scale and one tilt");
  for (double s : scales)
    if (!(s > 0 && s <= 1)) throw std::invalid_argument("step scales must be in (0, 1]");
  for (double t : tilts)
    if (!(t >= 1)) throw std::invalid_argument("step tilts must be at least 1");
  if (!(delta_phi_base > 0 && delta_phi_base <= 360)) throw std::invalid_argument("delta_phi_base must be in (0, 360]");
  if (!(sigma_base > 0)) throw std::invalid_argument("sigma_base must be positive");
  detector_params.validate();
}

namespace {

using kernels::Plane;

Plane to_plane(const Image& img) { return Plane(img.width(), img.height(), img.data()); }

float sample(const Plane& p, double x, double y) {
  x = std::clamp(x, 0.0, p.width - 1.0);
  y = std::clamp(y, 0.0, p.height - 1.0);
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, p.width - 1), y1 = std::min(y0 + 1, p.height - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1 - fx) * p.at(x0, y0) + fx * p.at(x1, y0);
  const double bot = (1 - fx) * p.at(x0, y1) + fx * p.at(x1, y1);
  return static_cast<float>((1 - fy) * top + fy * bot);
}

// out(x, y) = in(M * (x, y, 1)), M an affine map from output to input.
Plane warp(const Plane& in, int w, int h, const Eigen::Matrix<double, 2, 3>& M) {
  Plane out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(x, y) = sample(in, M(0, 0) * x + M(0, 1) * y + M(0, 2), M(1, 0) * x + M(1, 1) * y + M(1, 2));
  return out;
}

int scaled_size(int n, double f) { return static_cast<int>(std::floor((n - 1) * f + 1e-9)) + 1; }

}  // namespace

SynthView synth_view(const Image& img, const SynthViewSpec& spec) {
  spec.validate();
  if (img.empty()) throw std::invalid_argument("empty image");
  SynthView out;
  out.spec = spec;
  if (spec.is_identity()) {
    out.image = img;
    return out;
  }
  Plane cur = to_plane(img);
  Mat3 A = Mat3::Identity();

  if (spec.S < 1) {
    const double s = spec.sigma_base * (1.0 / spec.S - 1.0);
    cur = kernels::omp::gaussian_blur(cur, s, s);
    Eigen::Matrix<double, 2, 3> M;
    M << 1 / spec.S, 0, 0, 0, 1 / spec.S, 0;
    cur = warp(cur, scaled_size(cur.width, spec.S), scaled_size(cur.height, spec.S), M);
    Mat3 T = Mat3::Identity();
    T(0, 0) = T(1, 1) = spec.S;
    A = T * A;
  }
  if (spec.phi != 0) {
    const double a = spec.phi * std::numbers::pi / 180.0;
    const Mat2 R = rotation(a);
    const double c = std::abs(std::cos(a)), s = std::abs(std::sin(a));
    const int w = static_cast<int>(std::ceil(c * (cur.width - 1) + s * (cur.height - 1) - 1e-9)) + 1;
    const int h = static_cast<int>(std::ceil(s * (cur.width - 1) + c * (cur.height - 1) - 1e-9)) + 1;
    const Vec2 cin(0.5 * (cur.width - 1), 0.5 * (cur.height - 1)), cout(0.5 * (w - 1), 0.5 * (h - 1));
    Mat3 T = Mat3::Identity();
    T.topLeftCorner<2, 2>() = R;
    T.topRightCorner<2, 1>() = cout - R * cin;
    const Mat3 Ti = T.inverse();
    cur = warp(cur, w, h, Ti.topRows<2>());
    A = T * A;
  }
  if (spec.t > 1) {
    cur = kernels::omp::gaussian_blur(cur, spec.t * spec.sigma_base, spec.sigma_base);
    Eigen::Matrix<double, 2, 3> M;
    M << spec.t, 0, 0, 0, 1, 0;
    cur = warp(cur, scaled_size(cur.width, 1 / spec.t), cur.height, M);
    Mat3 T = Mat3::Identity();
    T(0, 0) = 1 / spec.t;
    A = T * A;
  }
  if (std::min(cur.width, cur.height) < kMinOctaveSize)
    throw std::invalid_argument("synthesized view is smaller than the minimum image size");
  out.image = Image::from_clamped(cur.width, cur.height, std::move(cur.data));
  out.A_view = A;
  return out;
}

std::vector<SynthViewSpec> gen_views(const StepConfig& cfg) {
  cfg.validate();
  std::vector<SynthViewSpec> out;
  for (double S : cfg.scales)
    for (double t : cfg.tilts) {
      if (t == 1.0) {
        out.push_back({S, 1.0, 0.0, cfg.sigma_base});
        continue;
      }
      const double step = cfg.delta_phi_base / t;
      for (int k = 0;; ++k) {
        const double phi = k * step;
        if (phi >= 180.0 - 1e-9) break;
        out.push_back({S, t, phi, cfg.sigma_base});
      }
    }
  return out;
}

std::vector<LocalAffineFrame> backproject_lafs(const std::vector<LocalAffineFrame>& lafs, const Mat3& A_view,
                                               int view_id) {
  const Mat2 L = A_view.topLeftCorner<2, 2>();
  if (!(std::abs(L.determinant()) > 0) || !A_view.allFinite()) throw DegenerateError("view transform is singular");
  const Mat3 Ai = A_view.inverse();
  const Mat2 Li = Ai.topLeftCorner<2, 2>();
  std::vector<LocalAffineFrame> out;
  out.reserve(lafs.size());
  for (const auto& f : lafs) {
    LocalAffineFrame g = f;
    g.center = Li * f.center + Ai.topRightCorner<2, 1>();
    g.A = Li * f.A;
    g.view_id = view_id;
    out.push_back(g);
  }
  return out;
}

}  // namespace wxbs
