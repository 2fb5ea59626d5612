#include "doctest.h"
#include "test_util.hpp"

#include "wxbs/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace wxbs;

namespace {

FeatureSet make_set(const std::vector<Vec2>& pts, const std::vector<std::vector<float>>& desc) {
  FeatureSet s;
  for (size_t i = 0; i < pts.size(); ++i) {
    LocalAffineFrame f;
    f.center = pts[i];
    s.append(f, desc[i]);
  }
  return s;
}

FeatureSet random_set(int n, int dim, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<float> nd;
  std::uniform_real_distribution<double> ud(0, 500);
  FeatureSet s;
  for (int i = 0; i < n; ++i) {
    std::vector<float> d(dim);
    for (auto& v : d) v = nd(g);
    LocalAffineFrame f;
    f.center = Vec2(ud(g), ud(g));
    s.append(f, d);
  }
  return s;
}

Correspondence corr(int a, int b, Vec2 pa, Vec2 pb, double ratio) {
  Correspondence c;
  c.idx_a = a;
  c.idx_b = b;
  c.pa = pa;
  c.pb = pb;
  c.ratio = ratio;
  return c;
}

std::set<std::pair<int, int>> pairs(const std::vector<Correspondence>& m) {
  std::set<std::pair<int, int>> s;
  for (const auto& c : m) s.insert({c.idx_a, c.idx_b});
  return s;
}

}  // namespace

TEST_CASE("nn_search") {
  SUBCASE("query inside the base") {
    const auto s = random_set(20, 8, 1);
    const auto nn = nn_search(std::vector<float>(s.descriptor(3), s.descriptor(3) + 8), s.descriptors, 8, 1);
    CHECK(nn[0][0].index == 3);
    CHECK(nn[0][0].distance == 0.0);
  }
  SUBCASE("two points on a line") {
    const auto nn = nn_search({0.f}, {3.f, -1.f}, 1, 2);
    CHECK(nn[0][0].index == 1);
    CHECK(nn[0][1].index == 0);
  }
  SUBCASE("matches an exhaustive scan") {
    const auto q = random_set(50, 128, 2), b = random_set(500, 128, 3);
    const auto nn = nn_search(q.descriptors, b.descriptors, 128, 2);
    for (int i = 0; i < 50; ++i) {
      std::vector<std::pair<double, int>> all;
      for (int j = 0; j < 500; ++j) {
        double d = 0;
        for (int k = 0; k < 128; ++k) d += std::pow(double(q.descriptor(i)[k]) - b.descriptor(j)[k], 2);
        all.push_back({d, j});
      }
      std::sort(all.begin(), all.end());
      CHECK(nn[i][0].index == all[0].second);
      CHECK(nn[i][1].index == all[1].second);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS(nn_search({0.f}, {}, 1, 1));
    CHECK_THROWS(nn_search({0.f}, {1.f}, 1, 2));
  }
}

TEST_CASE("snn_match ratio rule") {
  const auto a = make_set({Vec2(0, 0)}, {{0.f, 0.f}});
  SUBCASE("clear winner kept") {
    const auto b = make_set({Vec2(0, 0), Vec2(50, 0)}, {{0.5f, 0.f}, {1.f, 0.f}});
    const auto m = snn_match(a, b, 0.8);
    REQUIRE(m.size() == 1);
    CHECK(m[0].ratio == doctest::Approx(0.5));
  }
  SUBCASE("ambiguous rejected") {
    const auto b = make_set({Vec2(0, 0), Vec2(50, 0)}, {{0.9f, 0.f}, {1.f, 0.f}});
    CHECK(snn_match(a, b, 0.8).empty());
  }
  SUBCASE("duplicated descriptors rejected") {
    const auto b = make_set({Vec2(0, 0), Vec2(50, 0)}, {{0.3f, 0.f}, {0.3f, 0.f}});
    CHECK(snn_match(a, b, 0.8).empty());
    const auto z = make_set({Vec2(0, 0), Vec2(50, 0)}, {{0.f, 0.f}, {0.f, 0.f}});
    CHECK(snn_match(a, z, 0.8).empty());
  }
  CHECK_THROWS(snn_match(a, make_set({Vec2(0, 0)}, {{1.f, 0.f}}), 0.8));
}

TEST_CASE("fginn_match") {
  const auto a = make_set({Vec2(0, 0)}, {{0.f, 0.f}});
  SUBCASE("close second neighbour is skipped") {
    // b0 nearest; b1 within 9 px of b0 and almost as close; b2 far away.
    const auto b = make_set({Vec2(100, 100), Vec2(106, 106), Vec2(300, 40)}, {{0.5f, 0.f}, {0.f, 0.55f}, {1.f, 0.f}});
    CHECK(snn_match(a, b, 0.8).empty());
    const auto m = fginn_match(a, b, 0.8, 10);
    REQUIRE(m.size() == 1);
    CHECK(m[0].idx_b == 0);
    CHECK(m[0].ratio == doctest::Approx(0.5));
  }
  SUBCASE("single base feature is kept with ratio 0") {
    const auto m = fginn_match(a, make_set({Vec2(1, 1)}, {{3.f, 0.f}}), 0.8, 10);
    REQUIRE(m.size() == 1);
    CHECK(m[0].ratio == 0.0);
  }
  SUBCASE("radius 0 equals snn") {
    for (unsigned seed = 0; seed < 10; ++seed) {
      const auto x = random_set(80, 6, 10 + seed), y = random_set(90, 6, 40 + seed);
      const auto s = snn_match(x, y, 0.9), f = fginn_match(x, y, 0.9, 0.0);
      REQUIRE(s.size() == f.size());
      for (size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i].idx_a == f[i].idx_a);
        CHECK(s[i].idx_b == f[i].idx_b);
        CHECK(s[i].ratio == f[i].ratio);
      }
    }
  }
  SUBCASE("ratios never exceed the threshold") {
    const auto x = random_set(100, 4, 5), y = random_set(100, 4, 6);
    for (const auto& c : fginn_match(x, y, 0.7, 30)) CHECK(c.ratio <= 0.7);
  }
}

TEST_CASE("combine") {
  const std::vector<Correspondence> ab = {corr(1, 2, Vec2(0, 0), Vec2(5, 5), 0.4)};
  const std::vector<Correspondence> ba = {corr(2, 1, Vec2(5, 5), Vec2(0, 0), 0.3)};
  CHECK(pairs(combine(ab, ba, MatchStrategy::both)) == std::set<std::pair<int, int>>{{1, 2}});
  const auto e = combine(ab, ba, MatchStrategy::either);
  REQUIRE(e.size() == 1);
  CHECK(e[0].ratio == 0.3);
  CHECK(e[0].pa == Vec2(0, 0));
  const std::vector<Correspondence> other = {corr(7, 8, Vec2(0, 0), Vec2(0, 0), 0.1)};
  CHECK(combine(ab, other, MatchStrategy::both).empty());
  CHECK(combine(ab, other, MatchStrategy::either).size() == 2);
  CHECK(combine(ab, other, MatchStrategy::unidirectional).size() == 1);

  // A symmetric list combined with itself is unchanged.
  const std::vector<Correspondence> sym = {corr(1, 2, Vec2(0, 0), Vec2(0, 0), 0.5),
                                           corr(2, 1, Vec2(0, 0), Vec2(0, 0), 0.5)};
  CHECK(pairs(combine(sym, sym, MatchStrategy::both)) == pairs(sym));
  CHECK(pairs(combine(sym, sym, MatchStrategy::either)) == pairs(sym));
}

TEST_CASE("duplicate_filter") {
  SUBCASE("keeps the lowest ratio") {
    const auto out = duplicate_filter({corr(0, 0, Vec2(0, 0), Vec2(0, 0), 0.7), corr(1, 1, Vec2(4, 3), Vec2(6, 8), 0.5)}, 10);
    REQUIRE(out.size() == 1);
    CHECK(out[0].ratio == 0.5);
    CHECK(out[0].duplicates == 1);
  }
  SUBCASE("far apart both kept") {
    CHECK(duplicate_filter({corr(0, 0, Vec2(0, 0), Vec2(0, 0), 0.7), corr(1, 1, Vec2(50, 0), Vec2(50, 0), 0.5)}, 10)
              .size() == 2);
  }
  SUBCASE("close in one image only both kept") {
    CHECK(duplicate_filter({corr(0, 0, Vec2(0, 0), Vec2(0, 0), 0.7), corr(1, 1, Vec2(1, 0), Vec2(50, 0), 0.5)}, 10)
              .size() == 2);
  }
  SUBCASE("greedy chain") {
    const auto a = corr(0, 0, Vec2(0, 0), Vec2(0, 0), 0.5);
    const auto b = corr(1, 1, Vec2(8, 0), Vec2(8, 0), 0.6);
    const auto c = corr(2, 2, Vec2(16, 0), Vec2(16, 0), 0.7);
    const auto out = duplicate_filter({c, b, a}, 10);
    CHECK(pairs(out) == std::set<std::pair<int, int>>{{0, 0}, {2, 2}});
  }
  SUBCASE("idempotent") {
    std::vector<Correspondence> m;
    for (int i = 0; i < 200; ++i)
      m.push_back(corr(i, i, Vec2(test::uniform(0, 60), test::uniform(0, 60)),
                       Vec2(test::uniform(0, 60), test::uniform(0, 60)), test::uniform(0, 1)));
    const auto once = duplicate_filter(m, 5), twice = duplicate_filter(once, 5);
    REQUIRE(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].idx_a == twice[i].idx_a);
      CHECK(once[i].duplicates == twice[i].duplicates);
    }
  }
}

TEST_CASE("match_features keeps detector pools apart") {
  FeatureSet a, b;
  LocalAffineFrame h, d;
  h.detector = DetectorKind::hessian;
  d.detector = DetectorKind::dog;
  h.center = Vec2(10, 10);
  d.center = Vec2(200, 200);
  a.append(h, {1.f, 0.f});
  b.append(d, {1.f, 0.f});  // identical descriptor, other detector
  h.center = Vec2(300, 10);
  b.append(h, {0.f, 1.f});
  MatcherParams p;
  p.strategy = MatchStrategy::unidirectional;
  const auto m = match_features(a, b, p);
  REQUIRE(m.size() == 1);
  CHECK(m[0].idx_b == 1);
  CHECK(m[0].ratio == 0.0);
}

TEST_CASE("matching is thread-count independent") {
  const auto x = random_set(300, 32, 21), y = random_set(400, 32, 22);
  const int saved = num_threads();
  set_num_threads(1);
  const auto a = fginn_match(x, y, 0.95, 20);
  set_num_threads(4);
  const auto b = fginn_match(x, y, 0.95, 20);
  set_num_threads(saved);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].idx_b == b[i].idx_b);
    CHECK(a[i].ratio == b[i].ratio);
  }
}
