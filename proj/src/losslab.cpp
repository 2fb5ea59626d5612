#include "wxbs/losslab.hpp"

#include "wxbs/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace wxbs::losslab {

void Batch::validate() const {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("anchor and positive shapes differ");
  if (a.rows() < 1 || a.cols() < 1) throw std::invalid_argument("empty batch");
  for (int i = 0; i < a.rows(); ++i)
    if (std::abs(a.row(i).norm() - 1.0) > 1e-6 || std::abs(b.row(i).norm() - 1.0) > 1e-6)
      throw std::invalid_argument("batch rows must have unit norm");
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::triplet_margin: return "triplet_margin";
    case LossKind::hardnegc: return "hardnegc";
    case LossKind::contrastive: return "contrastive";
    case LossKind::softmin: return "softmin";
    case LossKind::posdist: return "posdist";
  }
  return "unknown";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "triplet_margin") return LossKind::triplet_margin;
  if (s == "hardnegc") return LossKind::hardnegc;
  if (s == "contrastive") return LossKind::contrastive;
  if (s == "softmin") return LossKind::softmin;
  if (s == "posdist") return LossKind::posdist;
  throw std::invalid_argument("unknown loss kind: " + s);
}

RowMatrix distance_matrix(const Batch& batch, Metric metric) {
  const int n = batch.size(), dim = static_cast<int>(batch.a.cols());
  if (metric == Metric::unit) {
    batch.validate();
    const auto d = kernels::omp::unit_distance_matrix(
        std::span<const double>(batch.a.data(), batch.a.size()),
        std::span<const double>(batch.b.data(), batch.b.size()), n, dim);
    return Eigen::Map<const RowMatrix>(d.data(), n, n);
  }
  if (batch.a.rows() != batch.b.rows() || batch.a.cols() != batch.b.cols())
    throw std::invalid_argument("anchor and positive shapes differ");
  RowMatrix D(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) D(i, j) = (batch.a.row(i) - batch.b.row(j)).norm();
  return D;
}

std::vector<Triplet> hardest_in_batch(const RowMatrix& D) {
  const int n = static_cast<int>(D.rows());
  if (n < 2 || D.cols() != n) throw std::invalid_argument("mining needs a square matrix with n >= 2");
  std::vector<Triplet> out(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    int jr = -1, kc = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (jr < 0 || D(i, j) < D(i, jr)) jr = j;
      if (kc < 0 || D(j, i) < D(kc, i)) kc = j;
    }
    Triplet t;
    t.d_pos = D(i, i);
    if (D(i, jr) <= D(kc, i)) {
      t.negative = jr;
      t.side = NegativeSide::row;
      t.d_neg = D(i, jr);
    } else {
      t.negative = kc;
      t.side = NegativeSide::column;
      t.d_neg = D(kc, i);
    }
    out[i] = t;
  }
  return out;
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double term(LossKind kind, double dp, double dn, double m) {
  switch (kind) {
    case LossKind::triplet_margin:
    case LossKind::hardnegc: return std::max(0.0, m + dp - dn);
    case LossKind::contrastive: return dp + std::max(0.0, m - dn);
    case LossKind::softmin: return softplus(dp - dn);
    case LossKind::posdist: return dp;
  }
  return 0.0;
}

// Adds s * d(distance(a_p, b_q)) to the gradients; `with_a` / `with_b`
// select which endpoint receives its share.
void add_distance_grad(const Batch& batch, Metric metric, int p, int q, double s, bool with_a, bool with_b,
                       Gradient& g) {
  if (s == 0.0) return;
  const auto a = batch.a.row(p), b = batch.b.row(q);
  if (metric == Metric::unit) {
    const double d = std::sqrt(std::max(0.0, 2.0 - 2.0 * a.dot(b)));
    if (d == 0.0) return;
    if (with_a) g.da.row(p) -= s / d * b;
    if (with_b) g.db.row(q) -= s / d * a;
  } else {
    const Eigen::RowVectorXd diff = a - b;
    const double d = diff.norm();
    if (d == 0.0) return;
    if (with_a) g.da.row(p) += s / d * diff;
    if (with_b) g.db.row(q) -= s / d * diff;
  }
}

}  // namespace

double loss(const Batch& batch, LossKind kind, double margin, Metric metric) {
  const RowMatrix D = distance_matrix(batch, metric);
  const int n = batch.size();
  if (kind == LossKind::posdist) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += D(i, i);
    return s / n;
  }
  const auto trip = hardest_in_batch(D);
  double s = 0;
  for (const auto& t : trip) s += term(kind, t.d_pos, t.d_neg, margin);
  return s / n;
}

Gradient loss_gradient(const Batch& batch, LossKind kind, double margin, Metric metric) {
  const RowMatrix D = distance_matrix(batch, metric);
  const int n = batch.size();
  Gradient g{RowMatrix::Zero(n, batch.a.cols()), RowMatrix::Zero(n, batch.b.cols())};
  std::vector<Triplet> trip;
  if (kind != LossKind::posdist) trip = hardest_in_batch(D);
  for (int i = 0; i < n; ++i) {
    double wp = 0, wn = 0;  // dL_i / d d_pos and dL_i / d d_neg
    if (kind == LossKind::posdist) {
      wp = 1;
    } else {
      const auto& t = trip[i];
      switch (kind) {
        case LossKind::triplet_margin:
        case LossKind::hardnegc:
          if (margin + t.d_pos - t.d_neg > 0) {
            wp = 1;
            wn = -1;
          }
          break;
        case LossKind::contrastive:
          wp = 1;
          if (margin - t.d_neg > 0) wn = -1;
          break;
        case LossKind::softmin: {
          const double s = sigmoid(t.d_pos - t.d_neg);
          wp = s;
          wn = -s;
          break;
        }
        case LossKind::posdist: break;
      }
    }
    add_distance_grad(batch, metric, i, i, wp / n, true, true, g);
    if (wn != 0.0) {
      const auto& t = trip[i];
      const bool cut = kind == LossKind::hardnegc;
      if (t.side == NegativeSide::row)  // d(a_i, b_neg)
        add_distance_grad(batch, metric, i, t.negative, wn / n, true, !cut, g);
      else  // d(a_neg, b_i)
        add_distance_grad(batch, metric, t.negative, i, wn / n, !cut, true, g);
    }
  }
  return g;
}

double mean_positive_distance(const Batch& batch, Metric metric) {
  double s = 0;
  for (int i = 0; i < batch.size(); ++i)
    s += metric == Metric::unit ? std::sqrt(std::max(0.0, 2.0 - 2.0 * batch.a.row(i).dot(batch.b.row(i))))
                                : (batch.a.row(i) - batch.b.row(i)).norm();
  return s / batch.size();
}

Batch toy_layout() {
  Batch pts{RowMatrix(5, 2), RowMatrix(5, 2)};
  pts.a << 0.0, 0.0, 1.0, 0.2, -0.6, 1.1, 0.4, -1.0, -1.2, -0.5;
  pts.b << 1.6, 0.3, -0.2, 0.1, 0.5, 1.0, -0.7, -0.9, 0.3, -0.3;
  return pts;
}

ToyTrajectory toy_optimize(const Batch& points, LossKind kind, int steps, double margin, const AdamParams& adam) {
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  if (points.a.rows() != points.b.rows() || points.a.cols() != points.b.cols() || points.a.rows() < 2)
    throw std::invalid_argument("toy problem needs at least two aligned pairs");
  if (!points.a.allFinite() || !points.b.allFinite()) throw std::invalid_argument("toy points must be finite");
  ToyTrajectory tr;
  Batch x = points;
  RowMatrix ma = RowMatrix::Zero(x.a.rows(), x.a.cols()), mb = ma, va = ma, vb = ma;
  tr.iterates.push_back(x);
  tr.losses.push_back(loss(x, kind, margin, Metric::euclidean));
  for (int t = 1; t <= steps; ++t) {
    const Gradient g = loss_gradient(x, kind, margin, Metric::euclidean);
    const double c1 = 1.0 - std::pow(adam.beta1, t), c2 = 1.0 - std::pow(adam.beta2, t);
    auto update = [&](RowMatrix& p, RowMatrix& m, RowMatrix& v, const RowMatrix& grad) {
      m = adam.beta1 * m + (1 - adam.beta1) * grad;
      v = adam.beta2 * v + (1 - adam.beta2) * grad.cwiseProduct(grad);
      p.array() -= adam.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.eps);
    };
    update(x.a, ma, va, g.da);
    update(x.b, mb, vb, g.db);
    tr.iterates.push_back(x);
    tr.losses.push_back(loss(x, kind, margin, Metric::euclidean));
  }
  return tr;
}

}  // namespace wxbs::losslab
