#include "wxbs/pyramid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace wxbs {

void DetectorParams::validate() const {
  if (min_features < 0) throw std::invalid_argument("min_features must be non-negative");
  if (levels_per_octave < 3) throw std::invalid_argument("levels_per_octave must be at least 3");
  if (!(sigma_base > 0)) throw std::invalid_argument("sigma_base must be positive");
  if (!(threshold >= 0)) throw std::invalid_argument("threshold must be non-negative");
  if (max_features < 0) throw std::invalid_argument("max_features must be non-negative");
}

const ScaleLevel& ScaleSpace::level_for_sigma(double sigma, int* factor) const {
  const ScaleLevel* best = &octaves.front().levels.front();
  int best_factor = octaves.front().factor;
  for (const auto& oct : octaves)
    for (const auto& lvl : oct.levels)
      if (lvl.sigma <= sigma && lvl.sigma > best->sigma) {
        best = &lvl;
        best_factor = oct.factor;
      }
  if (factor) *factor = best_factor;
  return *best;
}

namespace {

kernels::Plane downsample(const kernels::Plane& in) {
  const int w = (in.width + 1) / 2, h = (in.height + 1) / 2;
  kernels::Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = in.at(2 * x, 2 * y);
  return out;
}

// Scale-normalized determinant of Hessian of one level.
kernels::Plane hessian_response(const kernels::Plane& L, double sigma) {
  kernels::Plane out(L.width, L.height);
  const float norm = static_cast<float>(std::pow(sigma, 4));
  for (int y = 1; y + 1 < L.height; ++y)
    for (int x = 1; x + 1 < L.width; ++x) {
      const float c = L.at(x, y);
      const float dxx = L.at(x + 1, y) - 2 * c + L.at(x - 1, y);
      const float dyy = L.at(x, y + 1) - 2 * c + L.at(x, y - 1);
      const float dxy = 0.25f * (L.at(x + 1, y + 1) - L.at(x - 1, y + 1) - L.at(x + 1, y - 1) + L.at(x - 1, y - 1));
      out.at(x, y) = norm * (dxx * dyy - dxy * dxy);
    }
  return out;
}

kernels::Plane difference(const kernels::Plane& a, const kernels::Plane& b) {
  kernels::Plane out(a.width, a.height);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = b.data[i] - a.data[i];
  return out;
}

// Extrema weaker than this are numerical noise of flat regions.
constexpr float kResponseFloor = 1e-6f;

struct ResponseStack {
  std::vector<kernels::Plane> layers;
  std::vector<double> local_sigma;
};

bool is_extremum(const ResponseStack& st, int s, int x, int y, bool maximum) {
  const float v = st.layers[s].at(x, y);
  for (int ds = -1; ds <= 1; ++ds)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (ds == 0 && dy == 0 && dx == 0) continue;
        const float n = st.layers[s + ds].at(x + dx, y + dy);
        if (maximum ? !(v > n) : !(v < n)) return false;
      }
  return true;
}

struct Refined {
  double x, y, s, value;
};

// Quadratic fit in (x, y, scale). While the offset leaves the unit cell the
// fit moves to the neighbouring sample, at most three times; an offset that
// would step back to the previous sample is clamped to the cell instead.
bool refine(const ResponseStack& st, int s, int x, int y, Refined* out) {
  const int w = st.layers[0].width, h = st.layers[0].height;
  const int ns = static_cast<int>(st.layers.size());
  int px = -1, py = -1, ps = -1;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const auto& P = st.layers[s];
    const auto& Pp = st.layers[s - 1];
    const auto& Pn = st.layers[s + 1];
    const double c = P.at(x, y);
    Eigen::Vector3d g;
    g << 0.5 * (P.at(x + 1, y) - P.at(x - 1, y)), 0.5 * (P.at(x, y + 1) - P.at(x, y - 1)),
        0.5 * (Pn.at(x, y) - Pp.at(x, y));
    Eigen::Matrix3d H;
    H(0, 0) = P.at(x + 1, y) - 2 * c + P.at(x - 1, y);
    H(1, 1) = P.at(x, y + 1) - 2 * c + P.at(x, y - 1);
    H(2, 2) = Pn.at(x, y) - 2 * c + Pp.at(x, y);
    H(0, 1) = H(1, 0) = 0.25 * (P.at(x + 1, y + 1) - P.at(x - 1, y + 1) - P.at(x + 1, y - 1) + P.at(x - 1, y - 1));
    H(0, 2) = H(2, 0) = 0.25 * (Pn.at(x + 1, y) - Pn.at(x - 1, y) - Pp.at(x + 1, y) + Pp.at(x - 1, y));
    H(1, 2) = H(2, 1) = 0.25 * (Pn.at(x, y + 1) - Pn.at(x, y - 1) - Pp.at(x, y + 1) + Pp.at(x, y - 1));
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(H);
    if (!lu.isInvertible()) return false;
    Eigen::Vector3d off = -lu.solve(g);
    if (!off.allFinite()) return false;
    const int nx = x + static_cast<int>(std::lround(off(0)));
    const int ny = y + static_cast<int>(std::lround(off(1)));
    const int nsl = s + static_cast<int>(std::lround(off(2)));
    const bool inside = off.cwiseAbs().maxCoeff() <= 0.5;
    const bool oscillates = nx == px && ny == py && nsl == ps;
    if (inside || oscillates) {
      off = off.cwiseMax(-0.5).cwiseMin(0.5);
      out->x = x + off(0);
      out->y = y + off(1);
      out->s = s + off(2);
      out->value = c + 0.5 * g.dot(off);
      return true;
    }
    if (nx < 2 || ny < 2 || nx >= w - 2 || ny >= h - 2 || nsl < 1 || nsl >= ns - 1) return false;
    px = x;
    py = y;
    ps = s;
    x = nx;
    y = ny;
    s = nsl;
  }
  return false;
}

bool edge_like(const kernels::Plane& P, int x, int y, double ratio) {
  const double c = P.at(x, y);
  const double dxx = P.at(x + 1, y) - 2 * c + P.at(x - 1, y);
  const double dyy = P.at(x, y + 1) - 2 * c + P.at(x, y - 1);
  const double dxy = 0.25 * (P.at(x + 1, y + 1) - P.at(x - 1, y + 1) - P.at(x + 1, y - 1) + P.at(x - 1, y - 1));
  const double tr = dxx + dyy, det = dxx * dyy - dxy * dxy;
  if (det <= 0) return true;
  return tr * tr / det >= (ratio + 1) * (ratio + 1) / ratio;
}

std::vector<LocalAffineFrame> detect_octave(const Octave& oct, DetectorKind kind,
                                            const DetectorParams& p) {
  const int S = p.levels_per_octave;
  ResponseStack st;
  const bool dog = kind == DetectorKind::dog;
  if (dog) {
    for (size_t k = 0; k + 1 < oct.levels.size(); ++k) {
      st.layers.push_back(difference(oct.levels[k].image, oct.levels[k + 1].image));
      st.local_sigma.push_back(oct.levels[k].local_sigma);
    }
  } else {
    for (const auto& lvl : oct.levels) {
      st.layers.push_back(hessian_response(lvl.image, lvl.local_sigma));
      st.local_sigma.push_back(lvl.local_sigma);
    }
  }
  const int w = st.layers[0].width, h = st.layers[0].height;
  const double scale_step = std::pow(2.0, 1.0 / S);
  // Sub-level scale of a DoG layer sits between its two Gaussian levels.
  const double dog_shift = dog ? std::sqrt(scale_step) : 1.0;

  std::vector<LocalAffineFrame> out;
  for (int s = 1; s <= S; ++s) {
    const auto& P = st.layers[s];
    for (int y = 2; y < h - 2; ++y)
      for (int x = 2; x < w - 2; ++x) {
        const float v = P.at(x, y);
        if (std::abs(v) < kResponseFloor) continue;
        bool is_max = v > 0 && is_extremum(st, s, x, y, true);
        bool is_min = dog && v < 0 && !is_max && is_extremum(st, s, x, y, false);
        if (!is_max && !is_min) continue;
        Refined r;
        if (!refine(st, s, x, y, &r)) continue;
        const int ix = static_cast<int>(std::lround(r.x)), iy = static_cast<int>(std::lround(r.y));
        const int is = static_cast<int>(std::lround(r.s));
        if (ix < 1 || iy < 1 || ix >= w - 1 || iy >= h - 1) continue;
        if (!p.edge_like_allowed) {
          const auto& E = dog ? st.layers[is] : oct.levels[is].image;
          if (edge_like(E, ix, iy, p.edge_ratio)) continue;
        }
        const double local_sigma = oct.levels[0].local_sigma * std::pow(scale_step, r.s) * dog_shift;
        LocalAffineFrame laf;
        laf.center = Vec2(r.x * oct.factor, r.y * oct.factor);
        laf.A = Mat2::Identity() * (local_sigma * oct.factor);
        laf.response = std::abs(r.value);
        laf.detector = dog ? DetectorKind::dog : DetectorKind::hessian;
        out.push_back(laf);
      }
  }
  return out;
}

}  // namespace

ScaleSpace build_scale_space(const Image& img, const DetectorParams& params) {
  params.validate();
  if (img.empty() || std::min(img.width(), img.height()) < kMinOctaveSize)
    throw std::invalid_argument("image is smaller than the minimum pyramid size");
  const int S = params.levels_per_octave;
  const double k = std::pow(2.0, 1.0 / S);

  ScaleSpace ss;
  ss.levels_per_octave = S;
  ss.sigma_base = params.sigma_base;
  ss.width = img.width();
  ss.height = img.height();

  kernels::Plane base(img.width(), img.height(), img.data());
  base = kernels::omp::gaussian_blur(base, params.sigma_base, params.sigma_base);
  int factor = 1;
  while (std::min(base.width, base.height) >= kMinOctaveSize) {
    Octave oct;
    oct.factor = factor;
    double local = params.sigma_base;
    oct.levels.push_back({base, local * factor, local});
    for (int i = 1; i < S + 3; ++i) {
      const double next = local * k;
      const double inc = std::sqrt(next * next - local * local);
      kernels::Plane blurred = kernels::omp::gaussian_blur(oct.levels.back().image, inc, inc);
      local = next;
      oct.levels.push_back({std::move(blurred), local * factor, local});
    }
    base = downsample(oct.levels[S].image);
    ss.octaves.push_back(std::move(oct));
    factor *= 2;
  }
  return ss;
}

Patch extract_patch(const ScaleSpace& ss, const LocalAffineFrame& laf, int side, double mag) {
  if (side < 3) throw std::invalid_argument("patch side must be at least 3");
  if (!laf.valid()) throw std::invalid_argument("invalid local affine frame");
  Eigen::JacobiSVD<Mat2> svd(laf.A);
  const Vec2 sv = svd.singularValues();
  if (!(sv(1) > 0) || sv(0) / sv(1) > 1e6) throw DegenerateError("affine frame is degenerate");
  const double step = mag / (0.5 * side) * sv(1);
  int factor = 1;
  const auto& P = ss.level_for_sigma(0.75 * step, &factor).image;

  const double c = 0.5 * (side - 1);
  const Mat2 M = (mag / (0.5 * side) / factor) * laf.A;
  const Vec2 o = laf.center / factor;
  std::vector<float> out(static_cast<size_t>(side) * side);
  for (int i = 0; i < side; ++i) {
    const double v = i - c;
    for (int j = 0; j < side; ++j) {
      const double u = j - c;
      double x = o.x() + M(0, 0) * u + M(0, 1) * v;
      double y = o.y() + M(1, 0) * u + M(1, 1) * v;
      x = std::clamp(x, 0.0, P.width - 1.0);
      y = std::clamp(y, 0.0, P.height - 1.0);
      const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
      const int x1 = std::min(x0 + 1, P.width - 1), y1 = std::min(y0 + 1, P.height - 1);
      const double fx = x - x0, fy = y - y0;
      const double top = (1 - fx) * P.at(x0, y0) + fx * P.at(x1, y0);
      const double bot = (1 - fx) * P.at(x0, y1) + fx * P.at(x1, y1);
      out[static_cast<size_t>(i) * side + j] = static_cast<float>((1 - fy) * top + fy * bot);
    }
  }
  return Patch(side, std::move(out));
}

void sort_by_response(std::vector<LocalAffineFrame>& lafs) {
  std::stable_sort(lafs.begin(), lafs.end(), [](const LocalAffineFrame& a, const LocalAffineFrame& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.center.y() != b.center.y()) return a.center.y() < b.center.y();
    return a.center.x() < b.center.x();
  });
}

std::vector<LocalAffineFrame> adaptive_threshold(std::vector<LocalAffineFrame> sorted,
                                                 double threshold, int min_features) {
  size_t above = 0;
  while (above < sorted.size() && sorted[above].response >= threshold) ++above;
  const size_t keep = std::max(above, std::min(sorted.size(), static_cast<size_t>(std::max(0, min_features))));
  sorted.resize(keep);
  return sorted;
}

std::vector<LocalAffineFrame> detect(const ScaleSpace& ss, DetectorKind kind,
                                     const DetectorParams& params) {
  params.validate();
  if (kind == DetectorKind::hessian_affine) kind = DetectorKind::hessian;
  const int n = static_cast<int>(ss.octaves.size());
  std::vector<std::vector<LocalAffineFrame>> per_octave(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int o = 0; o < n; ++o) per_octave[o] = detect_octave(ss.octaves[o], kind, params);

  std::vector<LocalAffineFrame> all;
  for (auto& v : per_octave) all.insert(all.end(), v.begin(), v.end());
  sort_by_response(all);
  all = adaptive_threshold(std::move(all), params.threshold, params.min_features);
  if (params.max_features > 0 && static_cast<int>(all.size()) > params.max_features)
    all.resize(params.max_features);
  return all;
}

}  // namespace wxbs
