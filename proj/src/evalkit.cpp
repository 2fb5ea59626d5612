#include "wxbs/evalkit.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

namespace wxbs::eval {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

double clamp_acos(double c) { return std::acos(std::clamp(c, -1.0, 1.0)); }

Mat3 cross_matrix(const Vec3& e) {
  Mat3 m;
  m << 0, -e(2), e(1), e(2), 0, -e(0), -e(1), e(0), 0;
  return m;
}

bool inside(const Vec2& p, ImageSize d) {
  return p.x() >= 0 && p.y() >= 0 && p.x() <= d.width - 1 && p.y() <= d.height - 1;
}

}  // namespace

void GtCorrespondenceSet::validate(int w1, int h1, int w2, int h2) const {
  if (pairs.empty()) throw std::invalid_argument("gt: empty correspondence set");
  for (const auto& p : pairs) {
    if (!p.u.allFinite() || !p.v.allFinite()) throw std::invalid_argument("gt: non-finite point");
    if (w1 > 0 && h1 > 0 && !inside(p.u, {w1, h1})) throw std::invalid_argument("gt: point outside image 1");
    if (w2 > 0 && h2 > 0 && !inside(p.v, {w2, h2})) throw std::invalid_argument("gt: point outside image 2");
  }
}

std::vector<double> recall_curve(const GtCorrespondenceSet& gt, ModelKind kind, const Mat3& M,
                                 const std::vector<double>& thetas) {
  if (gt.pairs.empty()) throw std::invalid_argument("recall_curve: empty gt");
  std::vector<double> e;
  e.reserve(gt.pairs.size());
  for (const auto& p : gt.pairs) e.push_back(model_error(kind, M, p.u, p.v));
  std::vector<double> out;
  for (double th : thetas) {
    const auto n = std::count_if(e.begin(), e.end(), [&](double x) { return x < th; });
    out.push_back(static_cast<double>(n) / static_cast<double>(e.size()));
  }
  return out;
}

std::vector<double> category_recall(const std::vector<std::vector<double>>& per_pair) {
  if (per_pair.empty()) throw std::invalid_argument("category_recall: no pairs");
  std::vector<double> mean(per_pair.front().size(), 0.0);
  for (const auto& r : per_pair) {
    if (r.size() != mean.size()) throw std::invalid_argument("category_recall: curves differ in length");
    for (size_t i = 0; i < r.size(); ++i) mean[i] += r[i];
  }
  for (auto& m : mean) m /= static_cast<double>(per_pair.size());
  return mean;
}

double pose_error(const Mat3& R_est, const Vec3& t_est, const Mat3& R_gt, const Vec3& t_gt) {
  if (!(t_est.norm() > 0) || !(t_gt.norm() > 0)) throw std::invalid_argument("pose_error: zero translation");
  const double rot = clamp_acos(0.5 * ((R_est.transpose() * R_gt).trace() - 1.0));
  const double tr = clamp_acos(t_est.normalized().dot(t_gt.normalized()));
  return std::max(rot, tr) * kDeg;
}

double maa(const std::vector<double>& errors, double max_thr, double step) {
  if (errors.empty()) throw std::invalid_argument("maa: empty error list");
  if (!(step > 0) || !(max_thr > 0)) throw std::invalid_argument("maa: thresholds must be positive");
  const double k = max_thr / step;
  const long n = std::lround(k);
  if (n < 1 || std::abs(k - static_cast<double>(n)) > 1e-9 * k)
    throw std::invalid_argument("maa: step must divide max_thr");
  double acc = 0;
  for (long i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) * step;
    const auto pass = std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= t; });
    acc += static_cast<double>(pass) / static_cast<double>(errors.size());
  }
  return acc / static_cast<double>(n);
}

namespace {

// Linear triangulation with P1 = [I|0], P2 = [R|t] on normalized points.
Vec3 triangulate(const Vec2& x1, const Vec2& x2, const Mat3& R, const Vec3& t) {
  Eigen::Matrix<double, 3, 4> P1 = Eigen::Matrix<double, 3, 4>::Zero();
  P1.leftCols<3>() = Mat3::Identity();
  Eigen::Matrix<double, 3, 4> P2;
  P2 << R, t;
  Eigen::Matrix4d A;
  A.row(0) = x1.x() * P1.row(2) - P1.row(0);
  A.row(1) = x1.y() * P1.row(2) - P1.row(1);
  A.row(2) = x2.x() * P2.row(2) - P2.row(0);
  A.row(3) = x2.y() * P2.row(2) - P2.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  return X.head<3>() / X(3);
}

}  // namespace

Pose pose_from_fundamental(const Mat3& F, const Mat3& K1, const Mat3& K2, const std::vector<PointPair>& corrs) {
  if (corrs.empty()) throw std::invalid_argument("pose_from_fundamental: no correspondences");
  Eigen::JacobiSVD<Mat3> fs(F);
  const Vec3 s = fs.singularValues();
  if (!(s(0) > 0) || s(2) > 1e-6 * s(0) || s(1) <= 1e-9 * s(0))
    throw std::invalid_argument("pose_from_fundamental: F is not rank 2");

  const Mat3 E = K2.transpose() * F * K1;
  Eigen::JacobiSVD<Mat3> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU(), V = svd.matrixV();
  if (U.determinant() < 0) U = -U;
  if (V.determinant() < 0) V = -V;
  Mat3 W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const std::array<Mat3, 2> Rs = {U * W * V.transpose(), U * W.transpose() * V.transpose()};
  const Vec3 u3 = U.col(2);

  const Mat3 K1i = K1.inverse(), K2i = K2.inverse();
  std::vector<std::pair<Vec2, Vec2>> norm;
  for (const auto& c : corrs)
    norm.emplace_back((K1i * c.u.homogeneous()).hnormalized(), (K2i * c.v.homogeneous()).hnormalized());

  int best = -1;
  Pose out;
  for (const Mat3& R : Rs)
    for (double sign : {1.0, -1.0}) {
      const Vec3 t = sign * u3;
      int good = 0;
      for (const auto& [x1, x2] : norm) {
        const Vec3 X = triangulate(x1, x2, R, t);
        good += X.allFinite() && X.z() > 0 && (R * X + t).z() > 0;
      }
      if (good > best) {
        best = good;
        out = {R, t.normalized()};
      }
    }
  if (best <= 0) throw DegenerateError("pose_from_fundamental: no candidate passes cheirality");
  return out;
}

double covisibility(const std::vector<Vec2>& shared1, const std::vector<Vec2>& shared2, ImageSize dims1,
                    ImageSize dims2) {
  if (shared1.size() != shared2.size()) throw std::invalid_argument("covisibility: shared sets not aligned");
  if (shared1.empty()) return 0.0;
  auto ratio = [](const std::vector<Vec2>& pts, ImageSize d) {
    if (d.width <= 0 || d.height <= 0) throw std::invalid_argument("covisibility: bad image size");
    Vec2 lo = pts.front(), hi = pts.front();
    for (const auto& p : pts) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec2 ext = hi - lo;
    return std::min(1.0, ext.x() * ext.y() / (static_cast<double>(d.width) * d.height));
  };
  return std::min(ratio(shared1, dims1), ratio(shared2, dims2));
}

RepeatabilityResult repeatability_and_ms(const std::vector<LocalAffineFrame>& lafs1,
                                         const std::vector<LocalAffineFrame>& lafs2, const Mat3& H,
                                         ImageSize dims1, ImageSize dims2, double pixel_thr,
                                         const std::vector<std::pair<int, int>>& matches) {
  const Mat3 Hi = H.inverse();
  std::vector<int> p1, p2;
  std::vector<Vec2> mapped(lafs1.size());
  for (size_t i = 0; i < lafs1.size(); ++i) {
    mapped[i] = (H * lafs1[i].center.homogeneous()).hnormalized();
    if (inside(mapped[i], dims2)) p1.push_back(static_cast<int>(i));
  }
  for (size_t j = 0; j < lafs2.size(); ++j)
    if (inside((Hi * lafs2[j].center.homogeneous()).hnormalized(), dims1)) p2.push_back(static_cast<int>(j));

  RepeatabilityResult r;
  r.projectable = static_cast<int>(std::min(p1.size(), p2.size()));
  if (r.projectable == 0) return r;

  std::vector<std::tuple<double, int, int>> cand;
  for (int i : p1)
    for (int j : p2) {
      const double d = (mapped[i] - lafs2[j].center).norm();
      if (d <= pixel_thr) cand.emplace_back(d, i, j);
    }
  std::sort(cand.begin(), cand.end());

  auto greedy = [&](auto&& keep) {
    std::vector<char> used1(lafs1.size(), 0), used2(lafs2.size(), 0);
    int n = 0;
    for (const auto& [d, i, j] : cand) {
      if (used1[i] || used2[j] || !keep(i, j)) continue;
      used1[i] = used2[j] = 1;
      ++n;
    }
    return n;
  };
  std::vector<std::pair<int, int>> sorted_matches = matches;
  std::sort(sorted_matches.begin(), sorted_matches.end());
  r.repeated = greedy([](int, int) { return true; });
  r.correct_matches = greedy([&](int i, int j) {
    return std::binary_search(sorted_matches.begin(), sorted_matches.end(), std::make_pair(i, j));
  });
  r.repeatability = static_cast<double>(r.repeated) / r.projectable;
  r.matching_score = static_cast<double>(r.correct_matches) / r.projectable;
  return r;
}

Verdict pair_verdicts(const std::vector<PointPair>& output, const GtModel& gt, const VerdictParams& p) {
  Verdict v;
  v.total = static_cast<int>(output.size());
  if (output.empty()) {
    v.median_error = std::numeric_limits<double>::infinity();
    return v;
  }
  std::vector<double> e;
  for (const auto& c : output) e.push_back(model_error(gt.kind, gt.M, c.u, c.v));
  v.correct = static_cast<int>(std::count_if(e.begin(), e.end(), [&](double x) { return x < p.correct_px; }));
  v.solved = v.correct >= p.solved_min;
  std::sort(e.begin(), e.end());
  const size_t n = e.size();
  v.median_error = n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
  v.median_ok = v.median_error <= p.median_px;
  return v;
}

void CameraIntrinsics::validate() const {
  if (!(f > 0 && fr_x > 0 && fr_y > 0 && m > 0 && n > 0))
    throw std::invalid_argument("intrinsics: all parameters must be positive");
}

Mat3 CameraIntrinsics::matrix() const {
  validate();
  Mat3 K;
  K << m * f / fr_x, 0, m / 2, 0, n * f / fr_y, n / 2, 0, 0, 1;
  return K;
}

TurntableCameras turntable_cameras(const CameraIntrinsics& K, double phi_deg, double r) {
  const double phi = phi_deg / kDeg;
  const double c = std::cos(phi), s = std::sin(phi);
  TurntableCameras cam;
  cam.K = K.matrix();
  cam.R << c, 0, -s, 0, 1, 0, s, 0, c;
  cam.t = r * Vec3(s, 0, 1 - c);
  return cam;
}

Mat3 turntable_gt_F(const CameraIntrinsics& K, double phi_deg, double r) {
  const auto cam = turntable_cameras(K, phi_deg, r);
  if (!(cam.t.norm() > 1e-12 * std::max(1.0, std::abs(r))))
    throw DegenerateError("turntable_gt_F: zero baseline");
  const Mat3 F = cam.K.inverse().transpose() * cam.R * cam.K.transpose() *
                 cross_matrix(cam.K * cam.R.transpose() * cam.t);
  return F / F.norm();
}

}  // namespace wxbs::eval
