#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp with the same
// signature. Both produce bit-identical results: parallelism is only over
// independent output elements and each element is accumulated in a fixed order.

#include <cstddef>
#include <span>
#include <vector>

namespace wxbs {

/// Number of OpenMP worker threads (1 when built without OpenMP).
int num_threads();
void set_num_threads(int n);

namespace kernels {

/// Plain float raster used as kernel input/output.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0.0f) {}
  Plane(int w, int h, std::vector<float> d) : width(w), height(h), data(std::move(d)) {}

  float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
};

/// Normalized sampled Gaussian, radius ceil(4 sigma). Empty for sigma <= 0.
std::vector<float> gaussian_kernel(double sigma);

/// Nearest neighbours of one query row.
struct Neighbors {
  int first = -1;
  int second = -1;
  float d1 = 0.0f;  // Euclidean
  float d2 = 0.0f;
};

/// Squared Euclidean distance with 8 fixed partial sums.
float squared_distance(const float* a, const float* b, int dim);

namespace serial {

/// Separable convolution with border replication. Either sigma may be 0.
Plane gaussian_blur(const Plane& in, double sigma_x, double sigma_y);

/// Full query x base squared distance matrix, row-major.
std::vector<float> pairwise_sq_distances(std::span<const float> query, std::span<const float> base,
                                         int dim);

/// Two nearest neighbours per query. Ties go to the lower base index.
std::vector<Neighbors> two_nn(std::span<const float> query, std::span<const float> base, int dim);

/// Nearest neighbour plus the nearest one whose centre (base_xy, x/y
/// interleaved) lies at least `radius` from the first's centre. second is
/// -1 when no such competitor exists.
std::vector<Neighbors> fginn(std::span<const float> query, std::span<const float> base, int dim,
                             std::span<const double> base_xy, double radius);

/// Count of residuals <= threshold.
int count_inliers(std::span<const double> residuals, double threshold);

/// Row-major n x n matrix of sqrt(max(0, 2 - 2 <a_i, b_j>)).
std::vector<double> unit_distance_matrix(std::span<const double> a, std::span<const double> b,
                                         int n, int dim);

}  // namespace serial

namespace omp {

Plane gaussian_blur(const Plane& in, double sigma_x, double sigma_y);
std::vector<float> pairwise_sq_distances(std::span<const float> query, std::span<const float> base,
                                         int dim);
std::vector<Neighbors> two_nn(std::span<const float> query, std::span<const float> base, int dim);
std::vector<Neighbors> fginn(std::span<const float> query, std::span<const float> base, int dim,
                             std::span<const double> base_xy, double radius);
int count_inliers(std::span<const double> residuals, double threshold);
std::vector<double> unit_distance_matrix(std::span<const double> a, std::span<const double> b,
                                         int n, int dim);

}  // namespace omp

}  // namespace kernels
}  // namespace wxbs
