#include "wxbs/descriptor.hpp"

#include "patch_ops.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wxbs {

std::string to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::sift: return "sift";
    case DescriptorKind::rootsift: return "rootsift";
    case DescriptorKind::halfsift: return "halfsift";
    case DescriptorKind::pixels: return "pixels";
  }
  return "unknown";
}

DescriptorKind descriptor_from_string(const std::string& s) {
  if (s == "sift") return DescriptorKind::sift;
  if (s == "rootsift") return DescriptorKind::rootsift;
  if (s == "halfsift") return DescriptorKind::halfsift;
  if (s == "pixels") return DescriptorKind::pixels;
  throw std::invalid_argument("unknown descriptor kind: " + s);
}

int descriptor_dim(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::sift:
    case DescriptorKind::rootsift: return 128;
    case DescriptorKind::halfsift: return 64;
    case DescriptorKind::pixels: return 41 * 41;
  }
  return 0;
}

int descriptor_patch_side(DescriptorKind k) { return k == DescriptorKind::pixels ? 41 : 32; }

namespace {

constexpr int kCells = 4;

bool l2_normalize(std::vector<float>& v) {
  double n = 0;
  for (float x : v) n += static_cast<double>(x) * x;
  n = std::sqrt(n);
  if (!(n > 1e-12)) {
    std::fill(v.begin(), v.end(), 0.0f);
    return false;
  }
  for (auto& x : v) x = static_cast<float>(x / n);
  return true;
}

// 4x4 spatial cells times `bins` orientation bins over `range` radians,
// trilinear voting, Gaussian window of half the patch width.
std::vector<float> gradient_histogram(const Patch& p, int bins, double range) {
  const auto g = detail::patch_gradients(p);
  const int n = p.side;
  const double cw = static_cast<double>(n) / kCells;
  const double c = 0.5 * (n - 1), sw = 0.5 * n;
  std::vector<double> h(static_cast<size_t>(kCells) * kCells * bins, 0.0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const size_t i = static_cast<size_t>(y) * n + x;
      const double m = std::hypot(g.gx[i], g.gy[i]);
      if (m == 0) continue;
      double a = std::atan2(g.gy[i], g.gx[i]);
      a = std::fmod(a + 2 * std::numbers::pi, range);
      const double w = m * std::exp(-0.5 * ((x - c) * (x - c) + (y - c) * (y - c)) / (sw * sw));
      const double fx = (x + 0.5) / cw - 0.5, fy = (y + 0.5) / cw - 0.5, fo = a / range * bins;
      const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
      const int o0 = static_cast<int>(std::floor(fo));
      const double dx = fx - x0, dy = fy - y0, dob = fo - o0;
      for (int iy = 0; iy < 2; ++iy) {
        const int cy = y0 + iy;
        if (cy < 0 || cy >= kCells) continue;
        const double wy = iy ? dy : 1 - dy;
        for (int ix = 0; ix < 2; ++ix) {
          const int cx = x0 + ix;
          if (cx < 0 || cx >= kCells) continue;
          const double wx = ix ? dx : 1 - dx;
          for (int io = 0; io < 2; ++io) {
            const int ob = ((o0 + io) % bins + bins) % bins;
            const double wo = io ? dob : 1 - dob;
            h[(static_cast<size_t>(cy) * kCells + cx) * bins + ob] += w * wy * wx * wo;
          }
        }
      }
    }
  return std::vector<float>(h.begin(), h.end());
}

Descriptor sift_like(const Patch& p, DescriptorKind kind, int bins, double range) {
  Descriptor d;
  d.kind = kind;
  d.values = gradient_histogram(p, bins, range);
  if (!l2_normalize(d.values)) {
    d.zero_guard = true;
    return d;
  }
  for (auto& v : d.values) v = std::min(v, kSiftClip);
  l2_normalize(d.values);
  d.normalized = true;
  return d;
}

}  // namespace

Descriptor rootsift_from_sift(const Descriptor& sift) {
  Descriptor d;
  d.kind = DescriptorKind::rootsift;
  d.values = sift.values;
  double l1 = 0;
  for (float v : d.values) l1 += std::abs(v);
  if (!(l1 > 1e-12)) {
    std::fill(d.values.begin(), d.values.end(), 0.0f);
    d.zero_guard = true;
    return d;
  }
  for (auto& v : d.values) v = static_cast<float>(std::sqrt(std::abs(v) / l1));
  d.normalized = l2_normalize(d.values);
  d.zero_guard = !d.normalized;
  return d;
}

Descriptor describe(const Patch& p, DescriptorKind kind) {
  if (p.side <= 0 || p.data.size() != static_cast<size_t>(p.side) * p.side)
    throw std::invalid_argument("patch must be square");
  switch (kind) {
    case DescriptorKind::sift:
    case DescriptorKind::rootsift:
    case DescriptorKind::halfsift: {
      if (p.side < 16) throw std::invalid_argument("gradient descriptors need a patch of at least 16 pixels");
      if (kind == DescriptorKind::halfsift) return sift_like(p, kind, 4, std::numbers::pi);
      Descriptor s = sift_like(p, DescriptorKind::sift, 8, 2 * std::numbers::pi);
      return kind == DescriptorKind::sift ? s : rootsift_from_sift(s);
    }
    case DescriptorKind::pixels: {
      Descriptor d;
      d.kind = kind;
      d.values = photometric_normalize(p, NormalizeMode::zero_mean_unit_std).data;
      d.normalized = l2_normalize(d.values);
      d.zero_guard = !d.normalized;
      return d;
    }
  }
  throw std::invalid_argument("unknown descriptor kind");
}

std::vector<Descriptor> describe_frames(const ScaleSpace& ss, const std::vector<LocalAffineFrame>& lafs,
                                        DescriptorKind kind) {
  std::vector<Descriptor> out(lafs.size());
  const int side = descriptor_patch_side(kind);
  const int n = static_cast<int>(lafs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    try {
      out[i] = describe(extract_patch(ss, lafs[i], side, kDescriptorMag), kind);
    } catch (const DegenerateError&) {
      out[i].kind = kind;
      out[i].values.assign(descriptor_dim(kind), 0.0f);
      out[i].zero_guard = true;
    }
  }
  return out;
}

}  // namespace wxbs
