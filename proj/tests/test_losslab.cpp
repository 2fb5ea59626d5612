#include "doctest.h"
#include "test_util.hpp"

#include "wxbs/losslab.hpp"

#include <cmath>

using namespace wxbs::losslab;
using wxbs::test::normal;

namespace {

Batch random_batch(int n, int dim) {
  Batch b{RowMatrix(n, dim), RowMatrix(n, dim)};
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) {
      b.a(i, k) = normal();
      b.b(i, k) = b.a(i, k) + 0.7 * normal();
    }
    b.a.row(i).normalize();
    b.b.row(i).normalize();
  }
  return b;
}

Eigen::RowVectorXd on_circle(double angle, int dim = 2) {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(dim);
  v(0) = std::cos(angle);
  v(1) = std::sin(angle);
  return v;
}

double unit_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * a.dot(b)));
}

// Loss from the definitions with triplets fixed in advance and no
// validation, so rows may be perturbed off the sphere.
double oracle_loss(const Batch& x, const std::vector<Triplet>& trip, LossKind kind, double m) {
  double s = 0;
  const int n = static_cast<int>(x.a.rows());
  for (int i = 0; i < n; ++i) {
    const double dp = unit_dist(x.a.row(i), x.b.row(i));
    if (kind == LossKind::posdist) {
      s += dp;
      continue;
    }
    const auto& t = trip[i];
    const double dn = t.side == NegativeSide::row ? unit_dist(x.a.row(i), x.b.row(t.negative))
                                                  : unit_dist(x.a.row(t.negative), x.b.row(i));
    switch (kind) {
      case LossKind::triplet_margin:
      case LossKind::hardnegc: s += std::max(0.0, m + dp - dn); break;
      case LossKind::contrastive: s += dp + std::max(0.0, m - dn); break;
      case LossKind::softmin: s += -std::log(std::exp(-dp) / (std::exp(-dp) + std::exp(-dn))); break;
      case LossKind::posdist: break;
    }
  }
  return s / n;
}

// Brute-force mining over every off-diagonal entry of row and column i.
Triplet brute_mine(const RowMatrix& D, int i) {
  const int n = static_cast<int>(D.rows());
  Triplet best;
  best.d_neg = 1e300;
  for (int j = 0; j < n; ++j)
    if (j != i && D(i, j) < best.d_neg) best = {j, NegativeSide::row, D(i, i), D(i, j)};
  for (int k = 0; k < n; ++k)
    if (k != i && D(k, i) < best.d_neg) best = {k, NegativeSide::column, D(i, i), D(k, i)};
  return best;
}

}  // namespace

TEST_CASE("distance_matrix") {
  Batch same{RowMatrix(3, 2), RowMatrix(3, 2)};
  same.a << 1, 0, 0, 1, -1, 0;
  same.b = same.a;
  const auto D = distance_matrix(same);
  for (int i = 0; i < 3; ++i) CHECK(D(i, i) == 0.0);
  CHECK(D(0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(D(0, 2) == doctest::Approx(2.0));
  Batch bad = same;
  bad.a(0, 0) = 2;
  CHECK_THROWS(distance_matrix(bad));
}

TEST_CASE("hardest_in_batch") {
  SUBCASE("two-pair example") {
    RowMatrix D(2, 2);
    D << 0, 0.9, 1.1, 0;
    const auto t = hardest_in_batch(D);
    CHECK(t[0].negative == 1);
    CHECK(t[0].side == NegativeSide::row);
    CHECK(t[0].d_neg == 0.9);
    CHECK(t[1].negative == 0);
    CHECK(t[1].side == NegativeSide::column);
    CHECK(t[1].d_neg == 0.9);
  }
  SUBCASE("constant off-diagonal") {
    RowMatrix D = RowMatrix::Constant(5, 5, 0.7);
    D.diagonal().setZero();
    for (const auto& t : hardest_in_batch(D)) {
      CHECK(t.d_neg == 0.7);
      CHECK(t.side == NegativeSide::row);
    }
  }
  SUBCASE("matches brute force on random batches") {
    for (int trial = 0; trial < 60; ++trial) {
      const int n = 2 + static_cast<int>(wxbs::test::uniform(0, 127));
      const auto D = distance_matrix(random_batch(n, 8));
      const auto t = hardest_in_batch(D);
      for (int i = 0; i < n; ++i) {
        const auto b = brute_mine(D, i);
        CHECK(t[i].negative == b.negative);
        CHECK(t[i].side == b.side);
        CHECK(t[i].d_neg == b.d_neg);
      }
    }
  }
  SUBCASE("needs two pairs") { CHECK_THROWS(hardest_in_batch(RowMatrix::Zero(1, 1))); }
}

TEST_CASE("loss values") {
  SUBCASE("margin satisfied gives zero") {
    Batch x{RowMatrix(2, 2), RowMatrix(2, 2)};
    x.a << 1, 0, -1, 0;
    x.b = x.a;  // d_pos 0, d_neg 2
    CHECK(loss(x, LossKind::triplet_margin, 1.0) == 0.0);
  }
  SUBCASE("d_pos = d_neg = 1 gives the margin") {
    const double s60 = std::numbers::pi / 3;
    Batch x{RowMatrix(2, 2), RowMatrix(2, 2)};
    x.a.row(0) = on_circle(0);
    x.b.row(0) = on_circle(s60);
    x.a.row(1) = on_circle(2 * s60);
    x.b.row(1) = on_circle(3 * s60);
    CHECK(loss(x, LossKind::triplet_margin, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("hand-built three pairs") {
    Batch x{RowMatrix(3, 2), RowMatrix(3, 2)};
    x.a.row(0) = on_circle(0.0);
    x.b.row(0) = on_circle(0.3);
    x.a.row(1) = on_circle(1.0);
    x.b.row(1) = on_circle(1.6);
    x.a.row(2) = on_circle(-2.0);
    x.b.row(2) = on_circle(2.9);
    const auto D = distance_matrix(x);
    std::vector<Triplet> trip;
    for (int i = 0; i < 3; ++i) trip.push_back(brute_mine(D, i));
    for (auto k : {LossKind::triplet_margin, LossKind::hardnegc, LossKind::contrastive, LossKind::softmin,
                   LossKind::posdist})
      for (double m : {0.5, 1.0}) CHECK(loss(x, k, m) == doctest::Approx(oracle_loss(x, trip, k, m)).epsilon(1e-12));
  }
  SUBCASE("non-negative and hardnegc equals triplet") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = random_batch(10, 6);
      for (auto k : {LossKind::triplet_margin, LossKind::hardnegc, LossKind::contrastive, LossKind::softmin})
        CHECK(loss(x, k) >= 0.0);
      CHECK(loss(x, LossKind::hardnegc) == loss(x, LossKind::triplet_margin));
    }
  }
  CHECK(loss_from_string("softmin") == LossKind::softmin);
  CHECK_THROWS(loss_from_string("arcface"));
}

TEST_CASE("analytic gradients match central differences") {
  const double eps = 1e-5;
  for (auto kind : {LossKind::triplet_margin, LossKind::contrastive, LossKind::softmin, LossKind::posdist}) {
    int compared = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = random_batch(8, 5);
      const double m = 0.6;
      const auto D = distance_matrix(x);
      const auto trip = hardest_in_batch(D);
      // Skip batches with a point near a hinge kink.
      bool kink = false;
      for (const auto& t : trip)
        kink |= std::abs(m + t.d_pos - t.d_neg) < 1e-6 || std::abs(m - t.d_neg) < 1e-6;
      if (kink) continue;
      const auto g = loss_gradient(x, kind, m);
      for (int side = 0; side < 2; ++side)
        for (int i = 0; i < 8; ++i)
          for (int k = 0; k < 5; ++k) {
            Batch p = x, q = x;
            (side ? p.b : p.a)(i, k) += eps;
            (side ? q.b : q.a)(i, k) -= eps;
            const double fd = (oracle_loss(p, trip, kind, m) - oracle_loss(q, trip, kind, m)) / (2 * eps);
            const double an = (side ? g.db : g.da)(i, k);
            CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(fd)));
            ++compared;
          }
    }
    CHECK(compared > 0);
  }
}

TEST_CASE("hardnegc cuts the gradient through the hardest negative") {
  Batch x{RowMatrix(2, 3), RowMatrix(2, 3)};
  x.a.row(0) = on_circle(0.0, 3);
  x.b.row(0) = on_circle(0.8, 3);
  x.a.row(1) = on_circle(-0.3, 3);
  x.b.row(1) = x.a.row(1);
  const double m = 0.1;
  const auto trip = hardest_in_batch(distance_matrix(x));
  REQUIRE(trip[0].side == NegativeSide::row);
  REQUIRE(trip[0].negative == 1);  // N = b_1
  const auto gc = loss_gradient(x, LossKind::hardnegc, m);
  const auto gt = loss_gradient(x, LossKind::triplet_margin, m);
  for (int k = 0; k < 3; ++k) CHECK(gc.db(1, k) == 0.0);
  CHECK(gt.db.row(1).norm() > 0.1);
  // The anchor still feels the negative.
  CHECK((gc.da.row(0) - gt.da.row(0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("posdist gradient vanishes on coincident pairs") {
  Batch x{RowMatrix(2, 2), RowMatrix(2, 2)};
  x.a << 1, 0, 0, 1;
  x.b = x.a;
  const auto g = loss_gradient(x, LossKind::posdist);
  CHECK(g.da.norm() == 0.0);
  CHECK(g.db.norm() == 0.0);
}

TEST_CASE("toy optimization") {
  const Batch pts = toy_layout();
  REQUIRE(pts.size() == 5);
  SUBCASE("hardnegc lowers loss and positive distance") {
    const auto tr = toy_optimize(pts, LossKind::hardnegc, 150);
    REQUIRE(tr.iterates.size() == 151);
    CHECK(tr.losses.back() < tr.losses.front());
    CHECK(mean_positive_distance(tr.iterates.back(), Metric::euclidean) <
          mean_positive_distance(tr.iterates.front(), Metric::euclidean));
    // Recomputed loss of the final iterate agrees with the trajectory.
    CHECK(loss(tr.iterates.back(), LossKind::hardnegc, 1.0, Metric::euclidean) == tr.losses.back());
  }
  SUBCASE("posdist on coincident pairs is stationary") {
    Batch c = pts;
    c.b = c.a;
    const auto tr = toy_optimize(c, LossKind::posdist, 20);
    CHECK(tr.iterates.back().a == c.a);
    CHECK(tr.iterates.back().b == c.b);
  }
  SUBCASE("satisfied triplet margin is stationary") {
    Batch c{RowMatrix(3, 2), RowMatrix(3, 2)};
    c.a << 0, 0, 10, 0, 0, 10;
    c.b << 0.1, 0, 10.1, 0, 0.1, 10;
    const auto tr = toy_optimize(c, LossKind::triplet_margin, 30);
    CHECK(tr.losses.front() == 0.0);
    CHECK(tr.iterates.back().a == c.a);
    CHECK(tr.iterates.back().b == c.b);
  }
  SUBCASE("deterministic") {
    const auto a = toy_optimize(pts, LossKind::softmin, 50), b = toy_optimize(pts, LossKind::softmin, 50);
    CHECK(a.iterates.back().a == b.iterates.back().a);
  }
}
