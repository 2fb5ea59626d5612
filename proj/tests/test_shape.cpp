#include "doctest.h"
#include "test_util.hpp"

#include "wxbs/shape.hpp"

#include <cmath>
#include <numbers>

using namespace wxbs;

namespace {

Image elliptic_blob(double s_major, double s_minor, double angle) {
  const Mat2 R = rotation(angle);
  const Mat2 cov = R * Vec2(s_major * s_major, s_minor * s_minor).asDiagonal() * R.transpose();
  return test::render_blobs(161, 161, {{Vec2(80.3, 79.6), cov, 0.6}});
}

LocalAffineFrame frame_at(double scale) {
  LocalAffineFrame f;
  f.center = Vec2(80.3, 79.6);
  f.A = Mat2::Identity() * scale;
  return f;
}

double elongation_of(const Mat2& A) {
  Eigen::JacobiSVD<Mat2> svd(A);
  return svd.singularValues()(0) / svd.singularValues()(1);
}

Patch ramp(int side, double angle) {
  std::vector<float> d(static_cast<size_t>(side) * side);
  const double c = 0.5 * (side - 1);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      d[static_cast<size_t>(y) * side + x] =
          static_cast<float>(0.5 + 0.01 * ((x - c) * std::cos(angle) + (y - c) * std::sin(angle)));
  return Patch(side, d);
}

Patch rotate90(const Patch& p) {
  // (x, y) -> (side - 1 - y, x): a clockwise quarter turn in y-down pixels.
  std::vector<float> d(p.data.size());
  for (int y = 0; y < p.side; ++y)
    for (int x = 0; x < p.side; ++x) d[static_cast<size_t>(x) * p.side + (p.side - 1 - y)] = p.at(x, y);
  return Patch(p.side, d);
}

double angle_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2 * std::numbers::pi);
  return std::min(d, 2 * std::numbers::pi - d);
}

}  // namespace

TEST_CASE("baumberg on an isotropic blob stays isotropic") {
  const BaumbergParams p;
  const auto r = baumberg_adapt(elliptic_blob(4, 4, 0), frame_at(4), p);
  REQUIRE(r.accepted());
  CHECK(r.iterations <= 3);
  const Mat2 shape = r.laf.A / std::sqrt(r.laf.A.determinant());
  CHECK((shape - Mat2::Identity()).cwiseAbs().maxCoeff() < 0.05);
  CHECK(shape.determinant() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("baumberg recovers the shape of an elliptic blob") {
  const BaumbergParams p;
  for (double angle : {0.0, 0.5, 1.9}) {
    const auto r = baumberg_adapt(elliptic_blob(6, 3, angle), frame_at(std::sqrt(18.0)), p);
    REQUIRE(r.accepted());
    const Mat2 shape = r.laf.A / std::sqrt(r.laf.A.determinant());
    CHECK(std::abs(shape.determinant() - 1.0) <= 1e-6);
    CHECK(elongation_of(shape) == doctest::Approx(2.0).epsilon(0.10));
    // The ellipse A A^T agrees with the blob covariance up to scale.
    const Mat2 R = rotation(angle);
    Mat2 cov = R * Vec2(4.0, 1.0).asDiagonal() * R.transpose();
    cov /= std::sqrt(cov.determinant());
    const Mat2 est = shape * shape.transpose();
    CHECK((est - cov).norm() / cov.norm() < 0.10);
    CHECK(r.laf.A(0, 1) == 0.0);
  }
}

TEST_CASE("baumberg rejections are distinguishable") {
  const BaumbergParams p;
  SUBCASE("axis ratio 8 is too elongated") {
    const auto r = baumberg_adapt(elliptic_blob(16, 2, 0.3), frame_at(std::sqrt(32.0)), p);
    CHECK(r.status == ShapeStatus::elongated);
  }
  SUBCASE("region leaving the image") {
    LocalAffineFrame f = frame_at(4);
    f.center = Vec2(5, 80);
    CHECK(baumberg_adapt(elliptic_blob(4, 4, 0), f, p).status == ShapeStatus::boundary);
  }
  SUBCASE("flat image has no structure") {
    CHECK(baumberg_adapt(Image::filled(161, 161, 0.3f), frame_at(4), p).status == ShapeStatus::degenerate);
  }
  SUBCASE("a single iteration cannot converge on an elongated start") {
    BaumbergParams q = p;
    q.max_iter = 1;
    CHECK(baumberg_adapt(elliptic_blob(6, 3, 0.4), frame_at(std::sqrt(18.0)), q).status ==
          ShapeStatus::not_converged);
  }
}

TEST_CASE("baumberg from the pyramid agrees with the raw image") {
  const Image img = elliptic_blob(6, 3, 0.7);
  const auto ss = build_scale_space(img, DetectorParams{});
  const auto a = baumberg_adapt(img, frame_at(std::sqrt(18.0)), BaumbergParams{});
  const auto b = baumberg_adapt(ss, frame_at(std::sqrt(18.0)), BaumbergParams{});
  REQUIRE(a.accepted());
  REQUIRE(b.accepted());
  CHECK(elongation_of(b.laf.A) == doctest::Approx(elongation_of(a.laf.A)).epsilon(0.1));
}

TEST_CASE("dominant orientation") {
  SUBCASE("horizontal ramp") {
    const auto a = dominant_orientation(ramp(32, 0.0));
    REQUIRE(a.size() == 1);
    CHECK(angle_gap(a[0], 0.0) < std::numbers::pi / 18);
  }
  SUBCASE("rotating the patch shifts the angle by 90 degrees") {
    for (double ang : {0.0, 0.6, 2.2, 4.0}) {
      const auto a = dominant_orientation(ramp(32, ang));
      const auto b = dominant_orientation(rotate90(ramp(32, ang)));
      REQUIRE(a.size() == 1);
      REQUIRE(b.size() == 1);
      CHECK(angle_gap(a[0], ang) < std::numbers::pi / 18);
      CHECK(angle_gap(b[0], a[0] + std::numbers::pi / 2) < std::numbers::pi / 18);
    }
  }
  SUBCASE("constant patch") {
    CHECK(dominant_orientation(Patch(16, std::vector<float>(256, 0.4f))) == std::vector<double>{0.0});
  }
  SUBCASE("count and range on random patches") {
    const Image img = test::random_texture(64, 64, 80, 4);
    for (int i = 0; i < 30; ++i) {
      LocalAffineFrame f;
      f.center = Vec2(test::uniform(10, 54), test::uniform(10, 54));
      f.A = Mat2::Identity() * test::uniform(1, 4);
      const auto a = dominant_orientation(extract_patch(img, f, 32, 5.2));
      CHECK(a.size() >= 1);
      CHECK(a.size() <= 4);
      for (double v : a) {
        CHECK(v >= 0.0);
        CHECK(v < 2 * std::numbers::pi);
      }
    }
  }
  SUBCASE("too small") { CHECK_THROWS(dominant_orientation(Patch(8, std::vector<float>(64, 0.f)))); }
}

TEST_CASE("oriented frames rotate the measurement region onto the gradient") {
  // Ramp image with gradient at 40 degrees: after orientation the patch
  // gradient points along +x.
  const double ang = 40 * std::numbers::pi / 180;
  std::vector<float> d(100 * 100);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x)
      d[y * 100 + x] = static_cast<float>(0.5 + 0.003 * ((x - 50) * std::cos(ang) + (y - 50) * std::sin(ang)));
  const auto ss = build_scale_space(Image(100, 100, d), DetectorParams{});
  LocalAffineFrame f;
  f.center = Vec2(50, 50);
  f.A = Mat2::Identity() * 3;
  const auto frames = oriented_frames(ss, f);
  REQUIRE(frames.size() == 1);
  const auto again = dominant_orientation(extract_patch(ss, frames[0], 32, 5.2));
  CHECK(angle_gap(again[0], 0.0) < std::numbers::pi / 18);
}
