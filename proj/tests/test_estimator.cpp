#include "doctest.h"
#include "scene_util.hpp"

#include "wxbs/estimator.hpp"

#include <cmath>
#include <limits>

using namespace wxbs;
using namespace wxbs::test;

namespace {

std::vector<PointPair> homography_pairs(const Mat3& H, int n) {
  std::vector<PointPair> out;
  for (int i = 0; i < n; ++i) {
    const Vec2 u(uniform(0, 640), uniform(0, 480));
    out.push_back({u, transfer(H, u)});
  }
  return out;
}

// One point per quadrant keeps the minimal sample well conditioned.
std::vector<PointPair> spread_sample(const Mat3& H) {
  std::vector<PointPair> out;
  for (int q = 0; q < 4; ++q) {
    const Vec2 u(uniform(0, 320) + 320 * (q % 2), uniform(0, 240) + 240 * (q / 2));
    out.push_back({u, transfer(H, u)});
  }
  return out;
}

double epipolar_constraint(const Mat3& F, const PointPair& p) {
  return std::abs(p.v.homogeneous().dot(F * p.u.homogeneous()));
}

// Distance of point p to the line l, computed geometrically.
double point_line(const Vec3& l, const Vec2& p) {
  return std::abs(l(0) * p.x() + l(1) * p.y() + l(2)) / std::hypot(l(0), l(1));
}

}  // namespace

TEST_CASE("homography_dlt") {
  SUBCASE("identity") {
    const auto pairs = spread_sample(Mat3::Identity());
    CHECK((homography_dlt(pairs) - Mat3::Identity() / std::sqrt(3.0)).norm() < 1e-12);
  }
  SUBCASE("random minimal samples are exact") {
    for (int k = 0; k < 500; ++k) {
      const Mat3 H = random_homography();
      const Mat3 est = homography_dlt(spread_sample(H));
      CHECK((est - frobenius_canonical(H)).norm() <= 1e-9);
      CHECK(est.norm() == doctest::Approx(1.0));
    }
  }
  SUBCASE("collinear minimal sample") {
    std::vector<PointPair> pairs = {{{0, 0}, {0, 0}}, {{10, 10}, {5, 5}}, {{20, 20}, {9, 9}}, {{3, 50}, {2, 40}}};
    CHECK_THROWS_AS(homography_dlt(pairs), DegenerateError);
    CHECK_THROWS_AS(homography_dlt({pairs[0], pairs[1], pairs[3]}), std::invalid_argument);
  }
}

TEST_CASE("fundamental_solve") {
  SUBCASE("7-point on noise-free scenes") {
    for (int k = 0; k < 200; ++k) {
      const auto cams = random_cameras();
      std::vector<Vec3> X;
      for (int i = 0; i < 7; ++i) X.push_back(random_point());
      const auto pairs = project_all(cams, X);
      const auto sols = fundamental_solve(pairs, FundamentalAlgo::seven_point);
      REQUIRE(!sols.empty());
      CHECK(sols.size() <= 3);
      bool has_truth = false;
      for (const auto& F : sols) {
        CHECK(F.norm() == doctest::Approx(1.0));
        CHECK(std::abs(F.determinant()) <= 1e-8);
        for (const auto& p : pairs) CHECK(epipolar_constraint(F, p) <= 1e-9);
        has_truth |= (F - frobenius_canonical(cams.fundamental())).norm() < 1e-5;
      }
      CHECK(has_truth);
    }
  }
  SUBCASE("8-point on 50 pairs matches the ground truth") {
    for (int k = 0; k < 50; ++k) {
      const auto cams = random_cameras();
      std::vector<Vec3> X;
      for (int i = 0; i < 50; ++i) X.push_back(random_point());
      const auto sols = fundamental_solve(project_all(cams, X), FundamentalAlgo::eight_point);
      REQUIRE(sols.size() == 1);
      CHECK((sols[0] - frobenius_canonical(cams.fundamental())).norm() <= 1e-6);
      Eigen::JacobiSVD<Mat3> svd(sols[0]);
      CHECK(svd.singularValues()(2) <= 1e-10);
    }
  }
  SUBCASE("wrong sample sizes") {
    std::vector<PointPair> six(6, PointPair{});
    CHECK_THROWS_AS(fundamental_solve(six, FundamentalAlgo::seven_point), std::invalid_argument);
    CHECK_THROWS_AS(fundamental_solve(six, FundamentalAlgo::eight_point), std::invalid_argument);
  }
}

TEST_CASE("residuals") {
  const auto cams = random_cameras();
  const Mat3 F = cams.fundamental();
  SUBCASE("zero on consistent pairs") {
    for (int i = 0; i < 20; ++i) {
      const Vec3 X = random_point();
      const Vec2 u = cams.project1(X), v = cams.project2(X);
      CHECK(residual(ModelKind::fundamental, F / F.norm(), u, v, ResidualKind::symmetric_epipolar) < 1e-18);
      CHECK(residual(ModelKind::fundamental, F / F.norm(), u, v, ResidualKind::sampson) < 1e-18);
    }
    const Mat3 H = random_homography();
    const Vec2 u(100, 200);
    CHECK(residual(ModelKind::homography, H, u, transfer(H, u), ResidualKind::symmetric_transfer) < 1e-9);
  }
  SUBCASE("symmetric epipolar error equals the sum of squared point-line distances") {
    for (int i = 0; i < 50; ++i) {
      const Vec2 u(uniform(0, 640), uniform(0, 480)), v(uniform(0, 640), uniform(0, 480));
      const double d1 = point_line(F * u.homogeneous(), v), d2 = point_line(F.transpose() * v.homogeneous(), u);
      const double e = residual(ModelKind::fundamental, F, u, v, ResidualKind::symmetric_epipolar);
      CHECK(e == doctest::Approx(d1 * d1 + d2 * d2).epsilon(1e-9));
      CHECK(residual(ModelKind::fundamental, F.transpose(), v, u, ResidualKind::symmetric_epipolar) ==
            doctest::Approx(e).epsilon(1e-12));
      CHECK(model_error(ModelKind::fundamental, F, u, v) == doctest::Approx(std::sqrt(e / 2)).epsilon(1e-12));
    }
  }
  SUBCASE("hand-built values") {
    Mat3 Fh;
    Fh << 0, 0, 0, 0, 0, -1, 0, 1, 0;  // pure horizontal translation
    // Same row: zero.  Off by 2 rows: each line distance is 2.
    CHECK(residual(ModelKind::fundamental, Fh, {3, 5}, {9, 5}, ResidualKind::symmetric_epipolar) == 0.0);
    CHECK(residual(ModelKind::fundamental, Fh, {3, 5}, {9, 7}, ResidualKind::symmetric_epipolar) ==
          doctest::Approx(8.0));
    CHECK(residual(ModelKind::fundamental, Fh, {3, 5}, {9, 7}, ResidualKind::sampson) == doctest::Approx(2.0));
    // Translation by (2, 0): forward error 1, backward error 1.
    Mat3 T;
    T << 1, 0, 2, 0, 1, 0, 0, 0, 1;
    CHECK(residual(ModelKind::homography, T, {0, 0}, {3, 0}, ResidualKind::symmetric_transfer) ==
          doctest::Approx(1.0));
  }
  SUBCASE("kind mismatch") {
    CHECK_THROWS_AS(residual(ModelKind::homography, F, {0, 0}, {0, 0}, ResidualKind::sampson), std::invalid_argument);
    CHECK_THROWS_AS(residual(ModelKind::fundamental, F, {0, 0}, {0, 0}, ResidualKind::symmetric_transfer),
                    std::invalid_argument);
  }
}

TEST_CASE("loransac homography") {
  RansacParams p;
  p.inlier_threshold = 2.0;
  SUBCASE("noise-free inliers only") {
    const Mat3 H = random_homography();
    const auto pairs = homography_pairs(H, 100);
    const auto m = loransac(pairs, ModelRequest::homography, p);
    CHECK(m.kind == ModelKind::homography);
    CHECK(m.inliers.size() == 100);
    CHECK((m.M - frobenius_canonical(H)).norm() <= 1e-6);
  }
  SUBCASE("half outliers over 100 seeds") {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Mat3 H = random_homography();
      auto pairs = homography_pairs(H, 100);
      for (auto& q : pairs) q.v += Vec2(normal(0.3), normal(0.3));
      for (int i = 0; i < 100; ++i) pairs.push_back({{uniform(0, 640), uniform(0, 480)}, {uniform(0, 640), uniform(0, 480)}});
      p.seed = seed;
      const auto m = loransac(pairs, ModelRequest::homography, p);
      double worst = 0;
      for (int i = 0; i < 100; ++i) worst = std::max(worst, (transfer(m.M, pairs[i].u) - transfer(H, pairs[i].u)).norm());
      ok += worst < 1.0;
      for (int i : m.inliers) CHECK(model_error(ModelKind::homography, m.M, pairs[i].u, pairs[i].v) <= 2.0);
      const auto again = loransac(pairs, ModelRequest::homography, p);
      CHECK(again.M == m.M);
      CHECK(again.inliers == m.inliers);
    }
    CHECK(ok >= 95);
  }
  SUBCASE("too few correspondences") {
    CHECK_THROWS_AS(loransac(homography_pairs(Mat3::Identity(), 3), ModelRequest::homography, p),
                    std::invalid_argument);
  }
  SUBCASE("pure noise has no support") {
    std::vector<PointPair> pairs;
    for (int i = 0; i < 12; ++i) pairs.push_back({{uniform(0, 640), uniform(0, 480)}, {uniform(0, 640), uniform(0, 480)}});
    p.max_iter = 200;
    CHECK_THROWS_AS(loransac(pairs, ModelRequest::homography, p), NoModelError);
  }
  SUBCASE("invalid params") {
    p.inlier_threshold = 0;
    CHECK_THROWS_AS(loransac(homography_pairs(Mat3::Identity(), 10), ModelRequest::homography, p),
                    std::invalid_argument);
  }
}

namespace {

// Plane z = 8 plus optional off-plane points and uniform outliers.
std::vector<PointPair> mixed_scene(const TwoCameras& c, int plane, int off, int outliers) {
  std::vector<Vec3> X;
  for (int i = 0; i < plane; ++i) X.push_back(Vec3(uniform(-3, 3), uniform(-2, 2), 8.0));
  for (int i = 0; i < off; ++i) X.push_back(random_point());
  auto pairs = project_all(c, X);
  for (auto& q : pairs) {
    q.u += Vec2(normal(0.2), normal(0.2));
    q.v += Vec2(normal(0.2), normal(0.2));
  }
  for (int i = 0; i < outliers; ++i)
    pairs.push_back({{uniform(0, 640), uniform(0, 480)}, {uniform(0, 640), uniform(0, 480)}});
  return pairs;
}

}  // namespace

TEST_CASE("loransac fundamental recovers a general scene") {
  RansacParams p;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cams = random_cameras();
    const auto pairs = mixed_scene(cams, 0, 150, 50);
    p.seed = seed;
    const auto m = loransac(pairs, ModelRequest::fundamental, p);
    CHECK(m.kind == ModelKind::fundamental);
    CHECK(std::abs(m.M.determinant()) <= 1e-8);
    CHECK(m.M.norm() == doctest::Approx(1.0));
    int good = 0;
    for (int i = 0; i < 150; ++i) good += model_error(ModelKind::fundamental, m.M, pairs[i].u, pairs[i].v) <= 2.0;
    ok += good >= 140;
  }
  CHECK(ok >= 19);
}

TEST_CASE("plane-and-parallax recovers F under a dominant plane") {
  RansacParams p;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cams = random_cameras();
    const auto pairs = mixed_scene(cams, 160, 20, 40);
    p.seed = seed;
    const auto m = loransac(pairs, ModelRequest::fundamental, p);
    int good = 0;
    for (int i = 160; i < 180; ++i) good += model_error(ModelKind::fundamental, m.M, pairs[i].u, pairs[i].v) <= 2.0;
    // Fresh off-plane points must also be explained, not only the plane.
    int fresh = 0;
    for (int i = 0; i < 50; ++i) {
      const Vec3 X = random_point();
      fresh += model_error(ModelKind::fundamental, m.M, cams.project1(X), cams.project2(X)) <= 2.0;
    }
    ok += good >= 18 && fresh >= 45;
  }
  CHECK(ok >= 18);
}

TEST_CASE("auto mode chooses the model") {
  RansacParams p;
  int planar_h = 0, general_f = 0, rotation_h = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    p.seed = seed;
    const auto cams = random_cameras();
    planar_h += loransac(mixed_scene(cams, 150, 0, 50), ModelRequest::auto_select, p).kind == ModelKind::homography;
    general_f += loransac(mixed_scene(cams, 105, 45, 50), ModelRequest::auto_select, p).kind == ModelKind::fundamental;
    TwoCameras rot = cams;
    rot.t = Vec3::Zero();
    rotation_h += loransac(mixed_scene(rot, 0, 150, 50), ModelRequest::auto_select, p).kind == ModelKind::homography;
  }
  CHECK(planar_h >= 45);
  CHECK(general_f >= 45);
  CHECK(rotation_h >= 45);
}

TEST_CASE("laf_check") {
  const Mat3 I = Mat3::Identity();
  LocalAffineFrame f;
  f.center = Vec2(100, 100);
  f.A << 4, 0, 1, 3;
  SUBCASE("identical frames under identity pass") {
    CHECK(laf_check(ModelKind::homography, I, {{f, f}}, {0}, 2.0) == std::vector<int>{0});
  }
  SUBCASE("rotated elongated shape fails; infinite threshold keeps everything") {
    LocalAffineFrame g = f;
    Mat2 D = Mat2::Identity();
    D(0, 0) = 4;
    D(1, 1) = 0.25;
    g.A = f.A * D * rotation(std::numbers::pi / 2);
    const std::vector<LafPair> lafs = {{f, f}, {f, g}, {f, f}};
    CHECK(laf_check(ModelKind::homography, I, lafs, {0, 1, 2}, 2.0) == std::vector<int>{0, 2});
    CHECK(laf_check(ModelKind::homography, I, lafs, {0, 1, 2}, std::numeric_limits<double>::infinity()) ==
          std::vector<int>{0, 1, 2});
  }
  SUBCASE("frames transported through H pass") {
    const Mat3 H = random_homography();
    LocalAffineFrame g;
    g.center = transfer(H, f.center);
    // Jacobian of the projective map at the centre.
    const Vec3 q = H * f.center.homogeneous();
    Mat2 J;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) J(r, c) = (H(r, c) * q(2) - q(r) * H(2, c)) / (q(2) * q(2));
    g.A = J * f.A;
    CHECK(laf_check(ModelKind::homography, H, {{f, g}}, {0}, 0.5) == std::vector<int>{0});
  }
}
