// Serial reference kernels against their OpenMP counterparts.

#include "wxbs/kernels.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

using namespace wxbs;
using namespace wxbs::kernels;

namespace {

std::vector<float> random_floats(size_t n, unsigned seed) {
  std::mt19937 g(seed);
  std::uniform_real_distribution<float> u(0, 1);
  std::vector<float> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

std::vector<double> random_xy(size_t n, unsigned seed) {
  std::mt19937 g(seed);
  std::uniform_real_distribution<double> u(0, 512);
  std::vector<double> v(2 * n);
  for (auto& x : v) x = u(g);
  return v;
}

constexpr int kDim = 128;

template <class Blur>
void blur(benchmark::State& state, Blur&& f) {
  const int side = static_cast<int>(state.range(0));
  const Plane p(side, side, random_floats(static_cast<size_t>(side) * side, 1));
  for (auto _ : state) benchmark::DoNotOptimize(f(p, 2.0, 3.5));
  state.SetItemsProcessed(state.iterations() * side * side);
}

template <class Match>
void match(benchmark::State& state, Match&& f) {
  const auto n = static_cast<size_t>(state.range(0));
  const auto q = random_floats(n * kDim, 2), b = random_floats(n * kDim, 3);
  for (auto _ : state) benchmark::DoNotOptimize(f(q, b, kDim));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}

template <class Fginn>
void fginn_bench(benchmark::State& state, Fginn&& f) {
  const auto n = static_cast<size_t>(state.range(0));
  const auto q = random_floats(n * kDim, 4), b = random_floats(n * kDim, 5);
  const auto xy = random_xy(n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(f(q, b, kDim, xy, 10.0));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}

template <class Count>
void inliers(benchmark::State& state, Count&& f) {
  const auto n = static_cast<size_t>(state.range(0));
  std::vector<double> r(n);
  for (size_t i = 0; i < n; ++i) r[i] = std::fmod(i * 0.731, 6.0);
  for (auto _ : state) benchmark::DoNotOptimize(f(r, 3.0));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

template <class Dist>
void unit_dist(benchmark::State& state, Dist&& f) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> a(static_cast<size_t>(n) * kDim), b(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = std::sin(0.37 * i);
    b[i] = std::cos(0.53 * i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(f(a, b, n, kDim));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n);
}

}  // namespace

BENCHMARK_CAPTURE(blur, serial, serial::gaussian_blur)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(blur, omp, omp::gaussian_blur)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(match, serial_two_nn, serial::two_nn)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(match, omp_two_nn, omp::two_nn)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(fginn_bench, serial, serial::fginn)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(fginn_bench, omp, omp::fginn)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(inliers, serial, serial::count_inliers)->Arg(1 << 20);
BENCHMARK_CAPTURE(inliers, omp, omp::count_inliers)->Arg(1 << 20);
BENCHMARK_CAPTURE(unit_dist, serial, serial::unit_distance_matrix)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(unit_dist, omp, omp::unit_distance_matrix)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
