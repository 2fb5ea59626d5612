#pragma once

// Reference kernels for descriptor-learning losses: distance matrix,
// hardest-in-batch mining, loss values, analytic gradients and the 2-D toy
// optimizer.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace wxbs::losslab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Anchors a and positives b, one row per identity.
struct Batch {
  RowMatrix a;
  RowMatrix b;

  int size() const { return static_cast<int>(a.rows()); }
  /// Shapes agree and every row has unit norm within 1e-6.
  void validate() const;
};

enum class LossKind { triplet_margin, hardnegc, contrastive, softmin, posdist };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

/// Unit vectors use sqrt(max(0, 2 - 2<a,b>)); the toy mode works on raw
/// points with plain Euclidean distance.
enum class Metric { unit, euclidean };

enum class NegativeSide { row, column };

struct Triplet {
  int negative = -1;  // index into b (row side) or a (column side)
  NegativeSide side = NegativeSide::row;
  double d_pos = 0.0;
  double d_neg = 0.0;
};

RowMatrix distance_matrix(const Batch& batch, Metric metric = Metric::unit);

/// Per pair the closest non-matching descriptor from row i or column i.
/// Lower indices win ties within a side; the row side wins ties across.
std::vector<Triplet> hardest_in_batch(const RowMatrix& D);

inline constexpr double kDefaultMargin = 1.0;

double loss(const Batch& batch, LossKind kind, double margin = kDefaultMargin, Metric metric = Metric::unit);

struct Gradient {
  RowMatrix da;
  RowMatrix db;
};

/// Analytic gradient with the mined triplets held fixed. For hardnegc the
/// path through the hardest-negative descriptor is cut.
Gradient loss_gradient(const Batch& batch, LossKind kind, double margin = kDefaultMargin,
                       Metric metric = Metric::unit);

struct AdamParams {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ToyTrajectory {
  std::vector<Batch> iterates;  // steps + 1 entries, the first is the input
  std::vector<double> losses;   // loss of each iterate
};

/// Five 2-D pairs with each negative lying between positives.
Batch toy_layout();

/// Adam on raw 2-D points with Euclidean distances.
ToyTrajectory toy_optimize(const Batch& points, LossKind kind, int steps, double margin = kDefaultMargin,
                           const AdamParams& adam = {});

/// Mean positive-pair distance.
double mean_positive_distance(const Batch& batch, Metric metric);

}  // namespace wxbs::losslab
