#include "wxbs/estimator.hpp"

#include "wxbs/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace wxbs {

std::string to_string(ModelKind k) { return k == ModelKind::homography ? "homography" : "fundamental"; }

std::string to_string(ModelRequest r) {
  switch (r) {
    case ModelRequest::homography: return "h";
    case ModelRequest::fundamental: return "f";
    case ModelRequest::auto_select: return "auto";
  }
  return "?";
}

ModelRequest model_request_from_string(const std::string& s) {
  if (s == "h" || s == "homography") return ModelRequest::homography;
  if (s == "f" || s == "fundamental") return ModelRequest::fundamental;
  if (s == "auto") return ModelRequest::auto_select;
  throw std::invalid_argument("unknown model kind: " + s);
}

void RansacParams::validate() const {
  if (!(inlier_threshold > 0) || !std::isfinite(inlier_threshold))
    throw std::invalid_argument("ransac: inlier_threshold must be > 0");
  if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("ransac: confidence must be in (0,1)");
  if (max_iter < 1) throw std::invalid_argument("ransac: max_iter must be >= 1");
  if (!(degeneracy_fraction > 0 && degeneracy_fraction <= 1))
    throw std::invalid_argument("ransac: degeneracy_fraction must be in (0,1]");
  if (!(auto_h_fraction > 0 && auto_h_fraction <= 1))
    throw std::invalid_argument("ransac: auto_h_fraction must be in (0,1]");
}

int minimal_sample_size(ModelKind kind) { return kind == ModelKind::homography ? 4 : 7; }

namespace {

// Centroid to the origin, mean distance sqrt(2).
Mat3 hartley(const std::vector<Vec2>& pts) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double d = 0;
  for (const auto& p : pts) d += (p - c).norm();
  d /= static_cast<double>(pts.size());
  if (!(d > 1e-12)) throw DegenerateError("all points coincide");
  const double s = std::sqrt(2.0) / d;
  Mat3 T;
  T << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return T;
}

Vec2 apply(const Mat3& T, const Vec2& p) {
  const Vec3 q = T * p.homogeneous();
  return q.hnormalized();
}

Mat3 canonical(Mat3 M) {
  M /= M.norm();
  Eigen::Index r = 0, c = 0;
  M.cwiseAbs().maxCoeff(&r, &c);
  if (M(r, c) < 0) M = -M;
  return M;
}

bool collinear(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 e1 = b - a, e2 = c - a;
  const double cross = e1.x() * e2.y() - e1.y() * e2.x();
  return std::abs(cross) <= 1e-9 * e1.norm() * e2.norm() || e1.norm() == 0 || e2.norm() == 0;
}

bool any_three_collinear(const std::vector<Vec2>& p) {
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = i + 1; j < p.size(); ++j)
      for (size_t k = j + 1; k < p.size(); ++k)
        if (collinear(p[i], p[j], p[k])) return true;
  return false;
}

Mat3 reshape(const Eigen::VectorXd& h) {
  Mat3 M;
  M << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return M;
}

struct Normalized {
  Mat3 T1, T2;
  std::vector<Vec2> u, v;
};

Normalized normalize(const std::vector<PointPair>& pairs) {
  Normalized n;
  std::vector<Vec2> u, v;
  for (const auto& p : pairs) {
    u.push_back(p.u);
    v.push_back(p.v);
  }
  n.T1 = hartley(u);
  n.T2 = hartley(v);
  for (size_t i = 0; i < pairs.size(); ++i) {
    n.u.push_back(apply(n.T1, u[i]));
    n.v.push_back(apply(n.T2, v[i]));
  }
  return n;
}

// Rows of the epipolar system v^T F u = 0 with F row-major.
Eigen::MatrixXd epipolar_system(const Normalized& n) {
  const auto m = static_cast<Eigen::Index>(n.u.size());
  Eigen::MatrixXd A(std::max<Eigen::Index>(m, 9), 9);
  A.setZero();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = n.u[i].x(), y = n.u[i].y(), xp = n.v[i].x(), yp = n.v[i].y();
    A.row(i) << xp * x, xp * y, xp, yp * x, yp * y, yp, x, y, 1;
  }
  return A;
}

double det_combo(const Mat3& F1, const Mat3& F2, double a) { return (a * F1 + (1 - a) * F2).determinant(); }

std::vector<double> cubic_real_roots(double c0, double c1, double c2, double c3) {
  std::vector<double> roots;
  const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), std::abs(c3)});
  if (scale < 1e-14) return roots;  // identically singular family
  if (std::abs(c3) < 1e-12 * scale) {
    if (std::abs(c2) < 1e-12 * scale) {
      if (std::abs(c1) > 1e-12 * scale) roots.push_back(-c0 / c1);
      return roots;
    }
    const double disc = c1 * c1 - 4 * c2 * c0;
    if (disc < 0) return roots;
    const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
    roots.push_back(q / c2);
    if (q != 0) roots.push_back(c0 / q);
    return roots;
  }
  Mat3 C = Mat3::Zero();
  C(0, 0) = -c2 / c3;
  C(0, 1) = -c1 / c3;
  C(0, 2) = -c0 / c3;
  C(1, 0) = 1;
  C(2, 1) = 1;
  Eigen::EigenSolver<Mat3> es(C, false);
  for (int i = 0; i < 3; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) <= 1e-8 * (1 + std::abs(z.real()))) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

Mat3 homography_dlt(const std::vector<PointPair>& pairs) {
  if (pairs.size() < 4) throw std::invalid_argument("homography_dlt: need at least 4 pairs");
  const Normalized n = normalize(pairs);
  if (pairs.size() == 4 && (any_three_collinear(n.u) || any_three_collinear(n.v)))
    throw DegenerateError("homography_dlt: collinear minimal sample");
  const auto m = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd A(2 * m + (m == 4 ? 1 : 0), 9);
  A.setZero();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = n.u[i].x(), y = n.u[i].y(), xp = n.v[i].x(), yp = n.v[i].y();
    A.row(2 * i) << 0, 0, 0, -x, -y, -1, yp * x, yp * y, yp;
    A.row(2 * i + 1) << x, y, 1, 0, 0, 0, -xp * x, -xp * y, -xp;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > 1e-10 * sv(0))) throw DegenerateError("homography_dlt: rank-deficient system");
  const Mat3 H = n.T2.inverse() * reshape(svd.matrixV().col(8)) * n.T1;
  if (!H.allFinite() || std::abs(H.determinant()) <= 1e-14 * std::pow(H.norm(), 3))
    throw DegenerateError("homography_dlt: singular homography");
  return canonical(H);
}

std::vector<Mat3> fundamental_solve(const std::vector<PointPair>& pairs, FundamentalAlgo algo) {
  if (algo == FundamentalAlgo::seven_point && pairs.size() != 7)
    throw std::invalid_argument("fundamental_solve: 7-point needs exactly 7 pairs");
  if (algo == FundamentalAlgo::eight_point && pairs.size() < 8)
    throw std::invalid_argument("fundamental_solve: 8-point needs at least 8 pairs");
  Normalized n;
  try {
    n = normalize(pairs);
  } catch (const DegenerateError&) {
    return {};
  }
  const Eigen::MatrixXd A = epipolar_system(n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const auto& V = svd.matrixV();
  std::vector<Mat3> out;

  if (algo == FundamentalAlgo::eight_point) {
    if (!(sv(7) > 1e-10 * sv(0))) return out;
    Eigen::JacobiSVD<Mat3> f(reshape(V.col(8)), Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 s = f.singularValues();
    s(2) = 0;
    const Mat3 Fn = f.matrixU() * s.asDiagonal() * f.matrixV().transpose();
    const Mat3 F = n.T2.transpose() * Fn * n.T1;
    if (F.allFinite() && F.norm() > 0) out.push_back(canonical(F));
    return out;
  }

  if (!(sv(6) > 1e-10 * sv(0))) return out;
  const Mat3 F1 = reshape(V.col(7)), F2 = reshape(V.col(8));
  // det(a F1 + (1-a) F2) is a cubic in a; recover it from four samples.
  const double d0 = det_combo(F1, F2, 0), d1 = det_combo(F1, F2, 1);
  const double dm = det_combo(F1, F2, -1), d2 = det_combo(F1, F2, 2);
  const double c0 = d0;
  const double c2 = 0.5 * (d1 + dm) - c0;
  const double s13 = 0.5 * (d1 - dm);
  const double c3 = ((d2 - c0 - 4 * c2) / 2 - s13) / 3;
  const double c1 = s13 - c3;
  for (double a : cubic_real_roots(c0, c1, c2, c3)) {
    for (int it = 0; it < 4; ++it) {
      const double p = ((c3 * a + c2) * a + c1) * a + c0;
      const double dp = (3 * c3 * a + 2 * c2) * a + c1;
      if (dp == 0) break;
      a -= p / dp;
    }
    const Mat3 F = n.T2.transpose() * (a * F1 + (1 - a) * F2) * n.T1;
    if (F.allFinite() && F.norm() > 0) out.push_back(canonical(F));
  }
  return out;
}

double residual(ModelKind kind, const Mat3& M, const Vec2& u, const Vec2& v, ResidualKind rk) {
  if (rk == ResidualKind::symmetric_transfer) {
    if (kind != ModelKind::homography) throw std::invalid_argument("residual: transfer error needs a homography");
    const Vec2 fwd = apply(M, u), bwd = apply(M.inverse(), v);
    return 0.5 * ((v - fwd).norm() + (u - bwd).norm());
  }
  if (kind != ModelKind::fundamental) throw std::invalid_argument("residual: epipolar error needs a fundamental matrix");
  const Vec3 uh = u.homogeneous(), vh = v.homogeneous();
  const Vec3 Fu = M * uh, Ftv = M.transpose() * vh;
  const double c = vh.dot(Fu);
  const double n1 = Fu(0) * Fu(0) + Fu(1) * Fu(1);
  const double n2 = Ftv(0) * Ftv(0) + Ftv(1) * Ftv(1);
  if (rk == ResidualKind::sampson) {
    if (n1 + n2 == 0) return c == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return c * c / (n1 + n2);
  }
  if (c == 0) return 0.0;
  if (n1 == 0 || n2 == 0) return std::numeric_limits<double>::infinity();
  return c * c * (1.0 / n1 + 1.0 / n2);
}

double model_error(ModelKind kind, const Mat3& M, const Vec2& u, const Vec2& v) {
  if (kind == ModelKind::homography) return residual(kind, M, u, v, ResidualKind::symmetric_transfer);
  return std::sqrt(0.5 * residual(kind, M, u, v, ResidualKind::symmetric_epipolar));
}

namespace {

// Pixel errors of every pair; the homography inverse is computed once.
void errors(ModelKind kind, const Mat3& M, const std::vector<PointPair>& pairs, std::vector<double>& out) {
  out.resize(pairs.size());
  if (kind == ModelKind::homography) {
    const Mat3 Hi = M.inverse();
    for (size_t i = 0; i < pairs.size(); ++i)
      out[i] = 0.5 * ((pairs[i].v - apply(M, pairs[i].u)).norm() + (pairs[i].u - apply(Hi, pairs[i].v)).norm());
    for (auto& e : out)
      if (!std::isfinite(e)) e = std::numeric_limits<double>::infinity();
    return;
  }
  for (size_t i = 0; i < pairs.size(); ++i) out[i] = model_error(kind, M, pairs[i].u, pairs[i].v);
}

std::vector<int> inliers_of(ModelKind kind, const Mat3& M, const std::vector<PointPair>& pairs, double th) {
  std::vector<double> e;
  errors(kind, M, pairs, e);
  std::vector<int> idx;
  for (size_t i = 0; i < e.size(); ++i)
    if (e[i] <= th) idx.push_back(static_cast<int>(i));
  return idx;
}

std::vector<PointPair> subset(const std::vector<PointPair>& pairs, const std::vector<int>& idx) {
  std::vector<PointPair> s;
  s.reserve(idx.size());
  for (int i : idx) s.push_back(pairs[i]);
  return s;
}

std::optional<Mat3> least_squares(ModelKind kind, const std::vector<PointPair>& pairs) {
  try {
    if (kind == ModelKind::homography) {
      if (pairs.size() < 4) return std::nullopt;
      return homography_dlt(pairs);
    }
    if (pairs.size() < 8) return std::nullopt;
    auto f = fundamental_solve(pairs, FundamentalAlgo::eight_point);
    if (f.empty()) return std::nullopt;
    return f.front();
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

Mat3 cross_matrix(const Vec3& e) {
  Mat3 m;
  m << 0, -e(2), e(1), e(2), 0, -e(0), -e(1), e(0), 0;
  return m;
}

struct Best {
  Mat3 M = Mat3::Identity();
  int score = -1;
};

class Ransac {
 public:
  Ransac(ModelKind kind, const std::vector<PointPair>& pairs, const RansacParams& p, std::mt19937_64& rng,
         bool degeneracy)
      : kind_(kind), pairs_(pairs), p_(p), rng_(rng), degeneracy_(degeneracy) {}

  Best run(int* iterations) {
    const int n = static_cast<int>(pairs_.size());
    const int m = minimal_sample_size(kind_);
    long long limit = p_.max_iter;
    int it = 0;
    std::vector<int> idx;
    for (; it < limit; ++it) {
      draw(n, m, idx);
      for (const Mat3& M : hypotheses(subset(pairs_, idx))) {
        const int s = score(M);
        if (s <= best_.score) continue;
        best_ = {M, s};
        if (p_.lo_enabled) local_optimize();
        if (degeneracy_) plane_and_parallax();
        limit = std::min<long long>(limit, adaptive_bound(best_.score, n, m, it));
      }
    }
    if (iterations) *iterations = it;
    return best_;
  }

 private:
  long long adaptive_bound(int score, int n, int m, int it) const {
    const double w = static_cast<double>(score) / n;
    if (w >= 1.0) return it + 1;
    const double denom = std::log1p(-std::pow(w, m));
    if (denom == 0 || !std::isfinite(denom)) return p_.max_iter;
    const double N = std::ceil(std::log(1 - p_.confidence) / denom);
    return static_cast<long long>(std::min<double>(N, p_.max_iter));
  }

  void draw(int n, int m, std::vector<int>& idx) {
    std::uniform_int_distribution<int> d(0, n - 1);
    idx.clear();
    while (static_cast<int>(idx.size()) < m) {
      const int k = d(rng_);
      if (std::find(idx.begin(), idx.end(), k) == idx.end()) idx.push_back(k);
    }
  }

  std::vector<Mat3> hypotheses(const std::vector<PointPair>& sample) const {
    try {
      if (kind_ == ModelKind::homography) return {homography_dlt(sample)};
      return fundamental_solve(sample, FundamentalAlgo::seven_point);
    } catch (const DegenerateError&) {
      return {};
    }
  }

  int score(const Mat3& M) {
    errors(kind_, M, pairs_, buf_);
    return kernels::omp::count_inliers(buf_, p_.inlier_threshold);
  }

  // Least-squares refit on inliers at shrinking thresholds.
  void local_optimize() {
    Mat3 M = best_.M;
    const double eta = p_.inlier_threshold;
    for (double th : {2.0 * eta, 1.5 * eta, eta}) {
      const auto fit = least_squares(kind_, subset(pairs_, inliers_of(kind_, M, pairs_, th)));
      if (!fit) break;
      M = *fit;
    }
    // Ties go to the refit: same support, smaller residuals.
    const int s = score(M);
    if (s >= best_.score) best_ = {M, s};
  }

  // A dominant plane lets degenerate F hypotheses explain it entirely;
  // rebuild F from the plane homography plus two off-plane points.
  void plane_and_parallax() {
    const auto inl = inliers_of(kind_, best_.M, pairs_, p_.inlier_threshold);
    if (inl.size() < 8) return;
    RansacParams hp = p_;
    hp.max_iter = std::min(p_.max_iter, 1000);
    hp.seed = rng_();
    std::mt19937_64 hrng(hp.seed);
    const auto sub = subset(pairs_, inl);
    const Best h = Ransac(ModelKind::homography, sub, hp, hrng, false).run(nullptr);
    if (h.score < static_cast<int>(p_.degeneracy_fraction * inl.size())) return;
    const auto on_plane = inliers_of(ModelKind::homography, h.M, pairs_, p_.inlier_threshold);
    std::vector<int> off;
    for (int i = 0, j = 0; i < static_cast<int>(pairs_.size()); ++i) {
      if (j < static_cast<int>(on_plane.size()) && on_plane[j] == i) {
        ++j;
        continue;
      }
      off.push_back(i);
    }
    if (off.size() < 2) return;
    std::uniform_int_distribution<size_t> d(0, off.size() - 1);
    const int attempts = static_cast<int>(std::min<size_t>(200, off.size() * (off.size() - 1) / 2));
    for (int a = 0; a < attempts; ++a) {
      const size_t i = d(rng_);
      size_t j = d(rng_);
      if (i == j) continue;
      const auto& p1 = pairs_[off[i]];
      const auto& p2 = pairs_[off[j]];
      const Vec3 l1 = (h.M * p1.u.homogeneous()).cross(p1.v.homogeneous());
      const Vec3 l2 = (h.M * p2.u.homogeneous()).cross(p2.v.homogeneous());
      const Vec3 e = l1.cross(l2);
      if (!(e.norm() > 0) || !e.allFinite()) continue;
      const Mat3 F = canonical(cross_matrix(e / e.norm()) * h.M);
      const int s = score(F);
      if (s > best_.score) {
        best_ = {F, s};
        if (p_.lo_enabled) local_optimize();
      }
    }
  }

  ModelKind kind_;
  const std::vector<PointPair>& pairs_;
  const RansacParams& p_;
  std::mt19937_64& rng_;
  bool degeneracy_;
  Best best_;
  std::vector<double> buf_;
};

TwoViewModel estimate(ModelKind kind, const std::vector<PointPair>& pairs, const RansacParams& p,
                      std::mt19937_64& rng) {
  const int m = minimal_sample_size(kind);
  if (static_cast<int>(pairs.size()) < m)
    throw std::invalid_argument("loransac: " + std::to_string(pairs.size()) + " correspondences, need " +
                                std::to_string(m));
  TwoViewModel out;
  out.kind = kind;
  const Best b = Ransac(kind, pairs, p, rng, kind == ModelKind::fundamental).run(&out.iterations);
  if (b.score <= m) throw NoModelError("loransac: no " + to_string(kind) + " exceeds minimal support");
  out.M = b.M;
  out.inliers = inliers_of(kind, b.M, pairs, p.inlier_threshold);
  out.score = static_cast<double>(out.inliers.size());
  return out;
}

}  // namespace

TwoViewModel loransac(const std::vector<PointPair>& pairs, ModelRequest request, const RansacParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  if (request == ModelRequest::homography) return estimate(ModelKind::homography, pairs, p, rng);
  if (request == ModelRequest::fundamental) return estimate(ModelKind::fundamental, pairs, p, rng);

  if (pairs.size() < 8) return estimate(ModelKind::homography, pairs, p, rng);
  TwoViewModel f;
  try {
    f = estimate(ModelKind::fundamental, pairs, p, rng);
  } catch (const NoModelError&) {
    return estimate(ModelKind::homography, pairs, p, rng);
  }
  const auto sub = subset(pairs, f.inliers);
  RansacParams hp = p;
  hp.seed = rng();
  try {
    std::mt19937_64 hrng(hp.seed);
    const TwoViewModel h = estimate(ModelKind::homography, sub, hp, hrng);
    if (h.inliers.size() >= p.auto_h_fraction * f.inliers.size()) {
      std::mt19937_64 frng(hp.seed);
      return estimate(ModelKind::homography, pairs, p, frng);
    }
  } catch (const NoModelError&) {
  }
  return f;
}

std::vector<int> laf_check(ModelKind kind, const Mat3& M, const std::vector<LafPair>& lafs,
                           const std::vector<int>& inliers, double threshold) {
  if (std::isinf(threshold) && threshold > 0) return inliers;
  std::vector<int> kept;
  for (int i : inliers) {
    const auto& a = lafs.at(i).a;
    const auto& b = lafs.at(i).b;
    Eigen::JacobiSVD<Mat2> svd(a.A, Eigen::ComputeFullV);
    bool ok = model_error(kind, M, a.center, b.center) <= threshold;
    for (int k = 0; k < 2 && ok; ++k) {
      const Vec2 dir = svd.matrixV().col(k);
      ok = model_error(kind, M, a.center + a.A * dir, b.center + b.A * dir) <= threshold;
    }
    if (ok) kept.push_back(i);
  }
  return kept;
}

}  // namespace wxbs
