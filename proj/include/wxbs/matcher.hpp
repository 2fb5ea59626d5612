#pragma once

#include "wxbs/core.hpp"
#include "wxbs/descriptor.hpp"

#include <string>
#include <vector>

namespace wxbs {

/// Frames plus their descriptors, one row-major descriptor per frame.
struct FeatureSet {
  std::vector<LocalAffineFrame> lafs;
  std::vector<float> descriptors;
  int dim = 0;

  int size() const { return static_cast<int>(lafs.size()); }
  const float* descriptor(int i) const { return descriptors.data() + static_cast<size_t>(i) * dim; }
  void append(const LocalAffineFrame& laf, const std::vector<float>& desc);
  void append(const FeatureSet& other);
  void validate() const;
};

struct Correspondence {
  int idx_a = -1;
  int idx_b = -1;
  double distance = 0.0;
  double ratio = 0.0;  // 0 means no competitor was found
  Vec2 pa = Vec2::Zero();
  Vec2 pb = Vec2::Zero();
  int duplicates = 0;  // removed by duplicate_filter in favour of this one
};

enum class MatchStrategy { unidirectional, both, either };

std::string to_string(MatchStrategy s);
MatchStrategy strategy_from_string(const std::string& s);

struct MatcherParams {
  double ratio_threshold = 0.8;
  double fginn_radius = 10.0;
  MatchStrategy strategy = MatchStrategy::both;

  void validate() const;
};

struct KNeighbor {
  int index = -1;
  double distance = 0.0;
};

/// Exact k nearest neighbours by Euclidean distance, ties to the lower index.
std::vector<std::vector<KNeighbor>> nn_search(const std::vector<float>& query, const std::vector<float>& base,
                                              int dim, int k);

/// Second-nearest-neighbour ratio test. B needs at least two features.
std::vector<Correspondence> snn_match(const FeatureSet& a, const FeatureSet& b, double ratio);

/// Ratio against the first neighbour lying >= radius pixels from the first
/// nearest neighbour. Kept with ratio 0 when no such neighbour exists.
std::vector<Correspondence> fginn_match(const FeatureSet& a, const FeatureSet& b, double ratio, double radius);

/// m_ba indexes (B, A) and is swapped before combining.
std::vector<Correspondence> combine(const std::vector<Correspondence>& m_ab, const std::vector<Correspondence>& m_ba,
                                    MatchStrategy strategy);

/// Greedy in ascending ratio: each kept correspondence absorbs later ones
/// whose endpoints lie within radius in both images. Input order is kept.
std::vector<Correspondence> duplicate_filter(const std::vector<Correspondence>& corrs, double radius);

/// FGINN in the requested direction(s), matching frames only against frames
/// of the same detector.
std::vector<Correspondence> match_features(const FeatureSet& a, const FeatureSet& b, const MatcherParams& p);

}  // namespace wxbs
