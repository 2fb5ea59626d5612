#include "wxbs/matcher.hpp"

#include "wxbs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace wxbs {

void FeatureSet::append(const LocalAffineFrame& laf, const std::vector<float>& desc) {
  if (lafs.empty() && descriptors.empty()) dim = static_cast<int>(desc.size());
  if (static_cast<int>(desc.size()) != dim) throw std::invalid_argument("descriptor dimension mismatch");
  lafs.push_back(laf);
  descriptors.insert(descriptors.end(), desc.begin(), desc.end());
}

void FeatureSet::append(const FeatureSet& other) {
  if (other.lafs.empty()) return;
  if (lafs.empty()) dim = other.dim;
  if (other.dim != dim) throw std::invalid_argument("descriptor dimension mismatch");
  lafs.insert(lafs.end(), other.lafs.begin(), other.lafs.end());
  descriptors.insert(descriptors.end(), other.descriptors.begin(), other.descriptors.end());
}

void FeatureSet::validate() const {
  if (descriptors.size() != lafs.size() * static_cast<size_t>(std::max(dim, 0)))
    throw std::invalid_argument("feature set descriptor buffer does not match frame count");
  if (!lafs.empty() && dim <= 0) throw std::invalid_argument("feature set has no descriptor dimension");
}

std::string to_string(MatchStrategy s) {
  switch (s) {
    case MatchStrategy::unidirectional: return "unidirectional";
    case MatchStrategy::both: return "both";
    case MatchStrategy::either: return "either";
  }
  return "unknown";
}

MatchStrategy strategy_from_string(const std::string& s) {
  if (s == "unidirectional") return MatchStrategy::unidirectional;
  if (s == "both") return MatchStrategy::both;
  if (s == "either") return MatchStrategy::either;
  throw std::invalid_argument("unknown match strategy: " + s);
}

void MatcherParams::validate() const {
  if (!(ratio_threshold > 0 && ratio_threshold <= 1)) throw std::invalid_argument("ratio threshold must be in (0, 1]");
  if (!(fginn_radius >= 0)) throw std::invalid_argument("fginn radius must be non-negative");
}

std::vector<std::vector<KNeighbor>> nn_search(const std::vector<float>& query, const std::vector<float>& base,
                                              int dim, int k) {
  if (dim <= 0 || query.size() % dim || base.size() % dim) throw std::invalid_argument("dimension mismatch");
  const int nb = static_cast<int>(base.size() / dim), nq = static_cast<int>(query.size() / dim);
  if (nb == 0) throw std::invalid_argument("empty search base");
  if (k < 1 || k > nb) throw std::invalid_argument("k must be in [1, base size]");
  std::vector<std::vector<KNeighbor>> out(nq);
#pragma omp parallel
  {
    std::vector<std::pair<float, int>> buf(nb);
#pragma omp for schedule(dynamic, 16)
    for (int i = 0; i < nq; ++i) {
      for (int j = 0; j < nb; ++j)
        buf[j] = {kernels::squared_distance(query.data() + static_cast<size_t>(i) * dim,
                                            base.data() + static_cast<size_t>(j) * dim, dim),
                  j};
      std::partial_sort(buf.begin(), buf.begin() + k, buf.end());
      out[i].resize(k);
      for (int r = 0; r < k; ++r) out[i][r] = {buf[r].second, std::sqrt(static_cast<double>(buf[r].first))};
    }
  }
  return out;
}

namespace {

double safe_ratio(double d1, double d2) {
  if (d2 > 0) return d1 / d2;
  return 1.0;  // 0/0: indistinguishable competitor
}

std::vector<double> centers(const FeatureSet& s) {
  std::vector<double> xy(2 * s.lafs.size());
  for (size_t i = 0; i < s.lafs.size(); ++i) {
    xy[2 * i] = s.lafs[i].center.x();
    xy[2 * i + 1] = s.lafs[i].center.y();
  }
  return xy;
}

Correspondence make(const FeatureSet& a, const FeatureSet& b, int i, int j, double d, double ratio) {
  Correspondence c;
  c.idx_a = i;
  c.idx_b = j;
  c.distance = d;
  c.ratio = ratio;
  c.pa = a.lafs[i].center;
  c.pb = b.lafs[j].center;
  return c;
}

void check_pair(const FeatureSet& a, const FeatureSet& b) {
  a.validate();
  b.validate();
  if (!a.lafs.empty() && !b.lafs.empty() && a.dim != b.dim) throw std::invalid_argument("descriptor dimensions differ");
}

}  // namespace

std::vector<Correspondence> snn_match(const FeatureSet& a, const FeatureSet& b, double ratio) {
  check_pair(a, b);
  if (b.size() < 2) throw std::invalid_argument("second-nearest-neighbour matching needs two base features");
  std::vector<Correspondence> out;
  if (a.size() == 0) return out;
  const auto nn = kernels::omp::two_nn(a.descriptors, b.descriptors, a.dim);
  for (int i = 0; i < a.size(); ++i) {
    const double r = safe_ratio(nn[i].d1, nn[i].d2);
    if (r <= ratio) out.push_back(make(a, b, i, nn[i].first, nn[i].d1, r));
  }
  return out;
}

std::vector<Correspondence> fginn_match(const FeatureSet& a, const FeatureSet& b, double ratio, double radius) {
  check_pair(a, b);
  std::vector<Correspondence> out;
  if (a.size() == 0 || b.size() == 0) return out;
  const auto xy = centers(b);
  const auto nn = kernels::omp::fginn(a.descriptors, b.descriptors, a.dim, xy, radius);
  for (int i = 0; i < a.size(); ++i) {
    const double r = nn[i].second < 0 ? 0.0 : safe_ratio(nn[i].d1, nn[i].d2);
    if (r <= ratio) out.push_back(make(a, b, i, nn[i].first, nn[i].d1, r));
  }
  return out;
}

std::vector<Correspondence> combine(const std::vector<Correspondence>& m_ab, const std::vector<Correspondence>& m_ba,
                                    MatchStrategy strategy) {
  if (strategy == MatchStrategy::unidirectional) return m_ab;
  std::map<std::pair<int, int>, size_t> in_ba;
  std::vector<Correspondence> swapped;
  for (const auto& c : m_ba) {
    Correspondence s = c;
    std::swap(s.idx_a, s.idx_b);
    std::swap(s.pa, s.pb);
    in_ba.emplace(std::make_pair(s.idx_a, s.idx_b), swapped.size());
    swapped.push_back(s);
  }
  std::vector<Correspondence> out;
  if (strategy == MatchStrategy::both) {
    for (const auto& c : m_ab)
      if (in_ba.count({c.idx_a, c.idx_b})) out.push_back(c);
    return out;
  }
  std::map<std::pair<int, int>, size_t> pos;
  for (const auto& c : m_ab) {
    auto [it, inserted] = pos.emplace(std::make_pair(c.idx_a, c.idx_b), out.size());
    if (inserted) out.push_back(c);
    else if (c.ratio < out[it->second].ratio) out[it->second] = c;
  }
  for (const auto& c : swapped) {
    auto [it, inserted] = pos.emplace(std::make_pair(c.idx_a, c.idx_b), out.size());
    if (inserted) out.push_back(c);
    else if (c.ratio < out[it->second].ratio) out[it->second] = c;
  }
  return out;
}

std::vector<Correspondence> duplicate_filter(const std::vector<Correspondence>& corrs, double radius) {
  const size_t n = corrs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) { return corrs[x].ratio < corrs[y].ratio; });
  std::vector<char> absorbed(n, 0);
  std::vector<int> dups(n, 0);
  const double r2 = radius * radius;
  for (size_t oi = 0; oi < n; ++oi) {
    const size_t i = order[oi];
    if (absorbed[i]) continue;
    for (size_t oj = oi + 1; oj < n; ++oj) {
      const size_t j = order[oj];
      if (absorbed[j]) continue;
      if ((corrs[i].pa - corrs[j].pa).squaredNorm() <= r2 && (corrs[i].pb - corrs[j].pb).squaredNorm() <= r2) {
        absorbed[j] = 1;
        dups[i] += 1 + corrs[j].duplicates;
      }
    }
  }
  std::vector<Correspondence> out;
  for (size_t i = 0; i < n; ++i)
    if (!absorbed[i]) {
      out.push_back(corrs[i]);
      out.back().duplicates += dups[i];
    }
  return out;
}

std::vector<Correspondence> match_features(const FeatureSet& a, const FeatureSet& b, const MatcherParams& p) {
  p.validate();
  check_pair(a, b);
  // Pools by detector, matched independently and concatenated in pool order.
  std::map<DetectorKind, std::pair<std::vector<int>, std::vector<int>>> pools;
  for (int i = 0; i < a.size(); ++i) pools[a.lafs[i].detector].first.push_back(i);
  for (int j = 0; j < b.size(); ++j) pools[b.lafs[j].detector].second.push_back(j);

  auto subset = [](const FeatureSet& s, const std::vector<int>& idx) {
    FeatureSet o;
    o.dim = s.dim;
    o.lafs.reserve(idx.size());
    o.descriptors.reserve(idx.size() * static_cast<size_t>(s.dim));
    for (int i : idx) {
      o.lafs.push_back(s.lafs[i]);
      o.descriptors.insert(o.descriptors.end(), s.descriptor(i), s.descriptor(i) + s.dim);
    }
    return o;
  };

  std::vector<Correspondence> out;
  for (const auto& [kind, idx] : pools) {
    if (idx.first.empty() || idx.second.empty()) continue;
    const FeatureSet sa = subset(a, idx.first), sb = subset(b, idx.second);
    auto ab = fginn_match(sa, sb, p.ratio_threshold, p.fginn_radius);
    std::vector<Correspondence> ba;
    if (p.strategy != MatchStrategy::unidirectional) ba = fginn_match(sb, sa, p.ratio_threshold, p.fginn_radius);
    for (auto& c : combine(ab, ba, p.strategy)) {
      c.idx_a = idx.first[c.idx_a];
      c.idx_b = idx.second[c.idx_b];
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace wxbs
