#pragma once

// Shared fixtures: deterministic random data and analytic test images.

#include "wxbs/core.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace wxbs::test {

inline std::mt19937_64& rng() {
  static std::mt19937_64 g(12345);
  return g;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }
inline double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng()); }

/// Gaussian blob with covariance Sigma on a constant background.
struct Blob {
  Vec2 center;
  Mat2 cov;
  double amplitude;
};

inline Image render_blobs(int w, int h, const std::vector<Blob>& blobs, double background = 0.2) {
  std::vector<float> d(static_cast<size_t>(w) * h);
  std::vector<Mat2> inv;
  for (const auto& b : blobs) inv.push_back(b.cov.inverse());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = background;
      for (size_t i = 0; i < blobs.size(); ++i) {
        const Vec2 r = Vec2(x, y) - blobs[i].center;
        v += blobs[i].amplitude * std::exp(-0.5 * r.dot(inv[i] * r));
      }
      d[static_cast<size_t>(y) * w + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  return Image(w, h, std::move(d));
}

inline Image isotropic_blob(int w, int h, Vec2 c, double s, double amp = 0.6) {
  return render_blobs(w, h, {{c, Mat2::Identity() * s * s, amp}});
}

/// Smooth random texture: sum of random blobs, deterministic per seed.
inline Image random_texture(int w, int h, int count, unsigned seed, double smin = 2.0, double smax = 8.0) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> ux(0, w), uy(0, h), us(smin, smax), ua(-0.35, 0.35), ur(0, 3.14159);
  std::vector<Blob> blobs;
  for (int i = 0; i < count; ++i) {
    const double s1 = us(g), s2 = us(g);
    const Mat2 R = rotation(ur(g));
    Mat2 D = Mat2::Zero();
    D(0, 0) = s1 * s1;
    D(1, 1) = s2 * s2;
    blobs.push_back({Vec2(ux(g), uy(g)), R * D * R.transpose(), ua(g)});
  }
  return render_blobs(w, h, blobs, 0.5);
}

inline Image noise_image(int w, int h, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> d(static_cast<size_t>(w) * h);
  for (auto& v : d) v = u(g);
  return Image(w, h, std::move(d));
}

inline Mat2 random_positive_affine(double lo = -3.0, double hi = 3.0) {
  for (;;) {
    Mat2 A;
    A << uniform(lo, hi), uniform(lo, hi), uniform(lo, hi), uniform(lo, hi);
    if (A.determinant() > 1e-3) return A;
  }
}

}  // namespace wxbs::test
