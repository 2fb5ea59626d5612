#include "wxbs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wxbs {

int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_num_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

namespace kernels {

std::vector<float> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {};
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  std::vector<float> out(k.size());
  for (size_t i = 0; i < k.size(); ++i) out[i] = static_cast<float>(k[i] / sum);
  return out;
}

float squared_distance(const float* a, const float* b, int dim) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int k = 0;
  for (; k + 8 <= dim; k += 8) {
    for (int j = 0; j < 8; ++j) {
      const float d = a[k + j] - b[k + j];
      acc[j] += d * d;
    }
  }
  for (int j = 0; k < dim; ++k, ++j) {
    const float d = a[k] - b[k];
    acc[j] += d * d;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

namespace {

// One output row of a horizontal pass.
void blur_row(const float* src, float* dst, int width, const std::vector<float>& k) {
  const int r = static_cast<int>(k.size() / 2);
  for (int x = 0; x < width; ++x) {
    float acc = 0.0f;
    for (int i = -r; i <= r; ++i) {
      const int xx = std::clamp(x + i, 0, width - 1);
      acc += k[i + r] * src[xx];
    }
    dst[x] = acc;
  }
}

// One output row of a vertical pass.
void blur_col_row(const Plane& in, float* dst, int y, const std::vector<float>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int w = in.width;
  std::fill(dst, dst + w, 0.0f);
  for (int i = -r; i <= r; ++i) {
    const int yy = std::clamp(y + i, 0, in.height - 1);
    const float* src = in.data.data() + static_cast<size_t>(yy) * w;
    const float c = k[i + r];
    for (int x = 0; x < w; ++x) dst[x] += c * src[x];
  }
}

void update_two_nn(Neighbors& n, float d, int j) {
  if (n.first < 0 || d < n.d1) {
    n.second = n.first;
    n.d2 = n.d1;
    n.first = j;
    n.d1 = d;
  } else if (n.second < 0 || d < n.d2) {
    n.second = j;
    n.d2 = d;
  }
}

Neighbors query_two_nn(const float* q, std::span<const float> base, int dim) {
  Neighbors n;
  const int nb = static_cast<int>(base.size() / dim);
  for (int j = 0; j < nb; ++j) update_two_nn(n, squared_distance(q, base.data() + static_cast<size_t>(j) * dim, dim), j);
  n.d1 = std::sqrt(n.d1);
  n.d2 = std::sqrt(n.d2);
  return n;
}

// Nearest neighbour, then the nearest one whose centre lies at least
// `radius` away from the first neighbour's centre.
Neighbors query_fginn(const float* q, std::span<const float> base, int dim, std::span<const double> xy,
                      double radius, std::vector<float>& buf) {
  Neighbors n;
  const int nb = static_cast<int>(base.size() / dim);
  buf.resize(nb);
  for (int j = 0; j < nb; ++j) {
    buf[j] = squared_distance(q, base.data() + static_cast<size_t>(j) * dim, dim);
    if (n.first < 0 || buf[j] < buf[n.first]) n.first = j;
  }
  if (n.first < 0) return n;
  const double cx = xy[2 * n.first], cy = xy[2 * n.first + 1], r2 = radius * radius;
  for (int j = 0; j < nb; ++j) {
    if (j == n.first) continue;
    const double dx = xy[2 * j] - cx, dy = xy[2 * j + 1] - cy;
    if (dx * dx + dy * dy < r2) continue;
    if (n.second < 0 || buf[j] < buf[n.second]) n.second = j;
  }
  n.d1 = std::sqrt(buf[n.first]);
  n.d2 = n.second >= 0 ? std::sqrt(buf[n.second]) : 0.0f;
  return n;
}

void check_xy(std::span<const float> base, int dim, std::span<const double> xy) {
  if (xy.size() != 2 * (base.size() / dim)) throw std::invalid_argument("one centre per base descriptor expected");
}

double unit_distance(const double* a, const double* b, int dim) {
  double dot = 0.0;
  for (int k = 0; k < dim; ++k) dot += a[k] * b[k];
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * dot));
}

void check_dims(std::span<const float> q, std::span<const float> b, int dim) {
  if (dim <= 0 || q.size() % dim != 0 || b.size() % dim != 0)
    throw std::invalid_argument("descriptor buffers do not match dimension");
}

}  // namespace

namespace serial {

Plane gaussian_blur(const Plane& in, double sigma_x, double sigma_y) {
  Plane tmp = in;
  const auto kx = gaussian_kernel(sigma_x);
  if (!kx.empty()) {
    for (int y = 0; y < in.height; ++y)
      blur_row(in.data.data() + static_cast<size_t>(y) * in.width,
               tmp.data.data() + static_cast<size_t>(y) * in.width, in.width, kx);
  }
  const auto ky = gaussian_kernel(sigma_y);
  if (ky.empty()) return tmp;
  Plane out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    blur_col_row(tmp, out.data.data() + static_cast<size_t>(y) * in.width, y, ky);
  return out;
}

std::vector<float> pairwise_sq_distances(std::span<const float> query, std::span<const float> base,
                                         int dim) {
  check_dims(query, base, dim);
  const size_t nq = query.size() / dim, nb = base.size() / dim;
  std::vector<float> out(nq * nb);
  for (size_t i = 0; i < nq; ++i)
    for (size_t j = 0; j < nb; ++j)
      out[i * nb + j] = squared_distance(query.data() + i * dim, base.data() + j * dim, dim);
  return out;
}

std::vector<Neighbors> two_nn(std::span<const float> query, std::span<const float> base, int dim) {
  check_dims(query, base, dim);
  const size_t nq = query.size() / dim;
  std::vector<Neighbors> out(nq);
  for (size_t i = 0; i < nq; ++i) out[i] = query_two_nn(query.data() + i * dim, base, dim);
  return out;
}

std::vector<Neighbors> fginn(std::span<const float> query, std::span<const float> base, int dim,
                             std::span<const double> base_xy, double radius) {
  check_dims(query, base, dim);
  check_xy(base, dim, base_xy);
  const size_t nq = query.size() / dim;
  std::vector<Neighbors> out(nq);
  std::vector<float> buf;
  for (size_t i = 0; i < nq; ++i) out[i] = query_fginn(query.data() + i * dim, base, dim, base_xy, radius, buf);
  return out;
}

int count_inliers(std::span<const double> residuals, double threshold) {
  int c = 0;
  for (double r : residuals) c += (r <= threshold) ? 1 : 0;
  return c;
}

std::vector<double> unit_distance_matrix(std::span<const double> a, std::span<const double> b,
                                         int n, int dim) {
  std::vector<double> d(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d[static_cast<size_t>(i) * n + j] =
          unit_distance(a.data() + static_cast<size_t>(i) * dim, b.data() + static_cast<size_t>(j) * dim, dim);
  return d;
}

}  // namespace serial

namespace omp {

Plane gaussian_blur(const Plane& in, double sigma_x, double sigma_y) {
  Plane tmp = in;
  const auto kx = gaussian_kernel(sigma_x);
  const int h = in.height, w = in.width;
  if (!kx.empty()) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
      blur_row(in.data.data() + static_cast<size_t>(y) * w, tmp.data.data() + static_cast<size_t>(y) * w, w, kx);
  }
  const auto ky = gaussian_kernel(sigma_y);
  if (ky.empty()) return tmp;
  Plane out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) blur_col_row(tmp, out.data.data() + static_cast<size_t>(y) * w, y, ky);
  return out;
}

std::vector<float> pairwise_sq_distances(std::span<const float> query, std::span<const float> base,
                                         int dim) {
  check_dims(query, base, dim);
  const long nq = static_cast<long>(query.size() / dim);
  const size_t nb = base.size() / dim;
  std::vector<float> out(static_cast<size_t>(nq) * nb);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nq; ++i)
    for (size_t j = 0; j < nb; ++j)
      out[i * nb + j] = squared_distance(query.data() + i * dim, base.data() + j * dim, dim);
  return out;
}

std::vector<Neighbors> two_nn(std::span<const float> query, std::span<const float> base, int dim) {
  check_dims(query, base, dim);
  const long nq = static_cast<long>(query.size() / dim);
  std::vector<Neighbors> out(nq);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < nq; ++i) out[i] = query_two_nn(query.data() + i * dim, base, dim);
  return out;
}

std::vector<Neighbors> fginn(std::span<const float> query, std::span<const float> base, int dim,
                             std::span<const double> base_xy, double radius) {
  check_dims(query, base, dim);
  check_xy(base, dim, base_xy);
  const long nq = static_cast<long>(query.size() / dim);
  std::vector<Neighbors> out(nq);
#pragma omp parallel
  {
    std::vector<float> buf;
#pragma omp for schedule(dynamic, 16)
    for (long i = 0; i < nq; ++i) out[i] = query_fginn(query.data() + i * dim, base, dim, base_xy, radius, buf);
  }
  return out;
}

int count_inliers(std::span<const double> residuals, double threshold) {
  int c = 0;
  const long n = static_cast<long>(residuals.size());
#pragma omp parallel for reduction(+ : c) schedule(static) if (n > 4096)
  for (long i = 0; i < n; ++i) c += (residuals[i] <= threshold) ? 1 : 0;
  return c;
}

std::vector<double> unit_distance_matrix(std::span<const double> a, std::span<const double> b,
                                         int n, int dim) {
  std::vector<double> d(static_cast<size_t>(n) * n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d[static_cast<size_t>(i) * n + j] =
          unit_distance(a.data() + static_cast<size_t>(i) * dim, b.data() + static_cast<size_t>(j) * dim, dim);
  return d;
}

}  // namespace omp
}  // namespace kernels
}  // namespace wxbs
