#include <cmath>
#include <random>
#include <vector>

#include "amic/association.hpp"
#include "amic/synth.hpp"
#include "doctest.h"

using namespace amic;

TEST_CASE("count_periods on three-point windows") {
  auto counts = [](std::vector<double> x, std::vector<double> y) { return count_periods(x, y); };
  PeriodCounts up = counts({1, 2, 3}, {1, 2, 3});
  CHECK(up.pp == 2);
  CHECK(up.np == 0);
  PeriodCounts down = counts({1, 2, 3}, {3, 2, 1});
  CHECK(down.pp == 0);
  CHECK(down.np == 2);
  PeriodCounts mixed = counts({0, 1, 2}, {0, 1, 0});
  CHECK(mixed.pp == 1);
  CHECK(mixed.np == 1);
  PeriodCounts flat = counts({1, 1, 2}, {0, 3, 3});
  CHECK(flat.pp == 0);
  CHECK(flat.np == 0);
}

TEST_CASE("association_degree") {
  CHECK(association_degree(2, 0, 3) == 1.0);
  CHECK(association_degree(0, 2, 3) == -1.0);
  CHECK(association_degree(8, 2, 11) == 0.6);
  CHECK(association_degree(1, 1, 3) == 0.0);
}

TEST_CASE("classify") {
  const Classification pos = classify(8, 2, association_degree(8, 2, 11));
  CHECK(pos.sign == Sign::positive);
  CHECK(pos.confidence == 0.75);
  const Classification neg = classify(2, 8, association_degree(2, 8, 11));
  CHECK(neg.sign == Sign::negative);
  CHECK(neg.confidence == 0.75);
  const Classification none = classify(4, 4, 0.0);
  CHECK(none.sign == Sign::neither);
  CHECK(none.confidence == 1.0);
}

TEST_CASE("associate end to end") {
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y{1, 2, 3};
  const AssociationStats s = associate(x, y);
  CHECK(s.mu == 1.0);
  CHECK(s.sign == Sign::positive);
  const std::vector<double> y_neg{3, 2, 1};
  CHECK(associate(x, y_neg).mu == -1.0);
  const std::vector<double> y_hump{0, 1, 0};
  CHECK(associate(x, y_hump).mu == 0.0);
  CHECK(associate(x, y_hump).sign == Sign::neither);
}

TEST_CASE("negating y flips the sign and preserves bounds") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x, y, neg;
    for (int i = 0; i < 50; ++i) {
      x.push_back(unit(rng));
      y.push_back(0.6 * x.back() + 0.4 * unit(rng));
      neg.push_back(-y.back());
    }
    const AssociationStats a = associate(x, y);
    const AssociationStats b = associate(x, neg);
    CHECK(a.pp == b.np);
    CHECK(a.np == b.pp);
    CHECK(a.mu == -b.mu);
    CHECK(a.mu >= -1.0);
    CHECK(a.mu <= 1.0);
    if (a.sign == Sign::positive) CHECK(b.sign == Sign::negative);
    if (a.sign == Sign::neither) CHECK(b.sign == Sign::neither);
    CHECK(a.confidence >= 0.0);
  }
}

TEST_CASE("monotone transforms leave association unchanged") {
  const SeriesPair p = gen_relation(RelationKind::sine, 400, kDefaultNoise, 8);
  std::vector<double> ex;
  for (const double v : p.x) ex.push_back(std::exp(3.0 * v));
  const AssociationStats a = associate(p.x, p.y);
  const AssociationStats b = associate(ex, p.y);
  CHECK(a.pp == b.pp);
  CHECK(a.np == b.np);
  CHECK(a.mu == b.mu);
  CHECK(a.sign == b.sign);
}

TEST_CASE("raw values and ranks agree on tie-free data") {
  const SeriesPair p = gen_relation(RelationKind::linear, 300, kDefaultNoise, 4);
  const RankedPair r = rank_transform(p);
  const AssociationStats a = associate(p.x, p.y);
  const AssociationStats b = associate(r.u, r.v);
  CHECK(a.mu == b.mu);
  CHECK(a.sign == b.sign);
}

TEST_CASE("quadratic around its vertex is neither-leaning") {
  // Sorted x traces the parabola: down then up, so opposing and co-moving
  // steps balance out.
  std::vector<double> x, y;
  for (int i = 0; i <= 200; ++i) {
    x.push_back(i / 200.0);
    y.push_back(4.0 * (x.back() - 0.5) * (x.back() - 0.5));
  }
  const AssociationStats s = associate(x, y);
  CHECK(std::abs(s.mu) <= 0.01);
  CHECK(s.sign == Sign::neither);
}
