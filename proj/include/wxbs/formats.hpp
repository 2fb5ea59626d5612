#pragma once

#include "wxbs/descriptor.hpp"
#include "wxbs/estimator.hpp"
#include "wxbs/losslab.hpp"
#include "wxbs/matcher.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace wxbs {

/// Malformed input file; the message carries the 1-based line number.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Features: "WXBS-FEAT v1 count=N desc=KIND dim=D", then one line per frame
// "x y a11 a12 a21 a22 response view_id d1 ... dD", 9 significant digits.
// Frame values are rounded to float on write, which makes the text round-trip exact.
struct FeatureFile {
  DescriptorKind kind = DescriptorKind::rootsift;
  FeatureSet features;
};

void write_features(std::ostream& os, const FeatureFile& f);
FeatureFile read_features(std::istream& is);

// Matches: "x1 y1 x2 y2 ratio distance" per line, 17 digits.
struct MatchRecord {
  Vec2 p1 = Vec2::Zero();
  Vec2 p2 = Vec2::Zero();
  double ratio = 0.0;
  double distance = 0.0;

  bool operator==(const MatchRecord&) const = default;
};

void write_matches(std::ostream& os, const std::vector<MatchRecord>& m);
std::vector<MatchRecord> read_matches(std::istream& is);

// Model: "# H" or "# F", then three rows of three values (17 digits).
struct ModelFile {
  ModelKind kind = ModelKind::homography;
  Mat3 M = Mat3::Identity();
};

void write_model(std::ostream& os, const ModelFile& m);
ModelFile read_model(std::istream& is);

// Ground-truth correspondences: "x1 y1 x2 y2" per line.
void write_gt_pairs(std::ostream& os, const std::vector<PointPair>& pairs);
std::vector<PointPair> read_gt_pairs(std::istream& is);

// Toy trajectory: "WXBS-TRAJ v1 loss=KIND iterates=K pairs=N dim=D", then per
// iterate a line "# k loss" and N rows "a_1 .. a_D b_1 .. b_D" (17 digits).
struct Trajectory {
  losslab::LossKind kind = losslab::LossKind::hardnegc;
  std::vector<losslab::Batch> iterates;
  std::vector<double> losses;
};

void write_trajectory(std::ostream& os, const Trajectory& t);
Trajectory read_trajectory(std::istream& is);

/// Shortest printf("%.<digits>g") text of v.
std::string format_number(double v, int digits);

}  // namespace wxbs
