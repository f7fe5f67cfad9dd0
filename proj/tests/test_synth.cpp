#include <cmath>
#include <random>
#include <vector>

#include "amic/error.hpp"
#include "amic/ksg.hpp"
#include "amic/synth.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace amic;

namespace {

double mi_of(const SeriesPair& p) {
  const RankedPair r = rank_transform(p);
  return ksg_mi(CloudView{r.u, r.v}, 6).clamped;
}

}  // namespace

TEST_CASE("relation names round-trip") {
  CHECK(all_relations().size() == 10);
  for (const RelationKind k : all_relations()) CHECK(parse_relation(to_string(k)) == k);
  CHECK_THROWS_AS(parse_relation("spiral"), Error);
}

TEST_CASE("gen_relation is deterministic and timestamped") {
  const SeriesPair a = gen_relation(RelationKind::circle, 500, kDefaultNoise, 42);
  const SeriesPair b = gen_relation(RelationKind::circle, 500, kDefaultNoise, 42);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.timestamps.front() == kSynthEpoch);
  CHECK(a.timestamps[1] - a.timestamps[0] == kSynthStep);
  const SeriesPair c = gen_relation(RelationKind::circle, 500, kDefaultNoise, 43);
  CHECK(a.x != c.x);
  CHECK_THROWS_AS(gen_relation(RelationKind::linear, 9, 0.0, 1), Error);
}

TEST_CASE("noiseless linear has PCC exactly one") {
  CHECK(pearson(gen_relation(RelationKind::linear, 5000, 0.0, 9)) == 1.0);
}

TEST_CASE("pearson basics") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> neg{-1, -2, -3, -4, -5};
  CHECK(pearson(x, x) == doctest::Approx(1.0));
  CHECK(pearson(x, neg) == doctest::Approx(-1.0));
  const std::vector<double> flat{2, 2, 2, 2, 2};
  CHECK_THROWS_AS(pearson(x, flat), Error);
  CHECK(std::abs(pearson(gen_relation(RelationKind::circle, 20000, kDefaultNoise, 1))) <= 0.1);
}

TEST_CASE("dcor matches the full-matrix oracle") {
  for (const RelationKind k : {RelationKind::linear, RelationKind::circle, RelationKind::independent}) {
    for (const std::size_t n : {10u, 57u, 200u}) {
      const SeriesPair p = gen_relation(k, n, kDefaultNoise, n);
      CHECK(std::abs(dcor(p) - oracle::dcor(p.x, p.y)) <= 1e-9);
    }
  }
  const std::vector<double> x{0.3, 1.7, 2.2, 5.0, -1.0};
  CHECK(dcor(x, x) == doctest::Approx(1.0));
}

TEST_CASE("dcor on independent and circle data") {
  CHECK(dcor(gen_relation(RelationKind::independent, 3000, kDefaultNoise, 5)) <= 0.1);
  const double circle = dcor(gen_relation(RelationKind::circle, 3000, kDefaultNoise, 5));
  CHECK(circle > 0.0);
  CHECK(circle < 0.5);
}

TEST_CASE("independent relation has MI near zero") {
  double total = 0.0;
  for (unsigned seed = 0; seed < 10; ++seed) total += mi_of(gen_relation(RelationKind::independent, 5000, 0.05, seed));
  CHECK(total / 10.0 <= 0.05);
}

TEST_CASE("quadratic: low PCC, high MI") {
  const SeriesPair q = gen_relation(RelationKind::quadratic, 5000, kDefaultNoise, 2);
  CHECK(std::abs(pearson(q)) <= 0.1);
  const double base = mi_of(gen_relation(RelationKind::independent, 5000, kDefaultNoise, 2));
  CHECK(mi_of(q) > 5.0 * std::max(base, 0.01));
}

TEST_CASE("outliers weaken the linear relation") {
  for (unsigned seed = 0; seed < 3; ++seed) {
    CHECK(mi_of(gen_relation(RelationKind::linear_outliers, 3000, kDefaultNoise, seed)) <
          mi_of(gen_relation(RelationKind::linear, 3000, kDefaultNoise, seed)));
  }
}

TEST_CASE("compose lays out spans and gaps") {
  const std::vector<RelationKind> fig{RelationKind::cross, RelationKind::diamond, RelationKind::sine,
                                      RelationKind::quadratic};
  const Composition c = compose(fig, 2000, 1000, 7);
  REQUIRE(c.spans.size() == 4);
  CHECK(c.pair.size() == 4 * 2000 + 3 * 1000);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c.spans[i].kind == fig[i]);
    CHECK(c.spans[i].s_idx == i * 3000);
    CHECK(c.spans[i].e_idx == i * 3000 + 2000);
  }
  for (std::size_t i = 1; i < c.pair.size(); ++i) CHECK(c.pair.timestamps[i] - c.pair.timestamps[i - 1] == kSynthStep);

  const Composition one = compose({RelationKind::sine}, 500, 0, 1);
  REQUIRE(one.spans.size() == 1);
  CHECK(one.spans[0].s_idx == 0);
  CHECK(one.spans[0].e_idx == one.pair.size());

  const Composition tight = compose({RelationKind::sine, RelationKind::circle}, 300, 0, 1);
  CHECK(tight.spans[1].s_idx == tight.spans[0].e_idx);

  // A short gap is still honoured exactly.
  const Composition narrow = compose({RelationKind::sine, RelationKind::circle}, 300, 4, 1);
  CHECK(narrow.spans[1].s_idx == 304);
  CHECK_THROWS_AS(compose({}, 300, 0, 1), Error);
}

namespace {

// Population PCC of (t, f(t) + e) for t ~ U(0,1), e ~ N(0, s), by midpoint
// integration.
template <class F>
double functional_pcc(F f, double s) {
  const int steps = 100000;
  double ef = 0.0, ef2 = 0.0, etf = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / steps;
    const double y = f(t);
    ef += y / steps;
    ef2 += y * y / steps;
    etf += t * y / steps;
  }
  const double cov = etf - 0.5 * ef;
  return cov / (std::sqrt(1.0 / 12.0) * std::sqrt(ef2 - ef * ef + s * s));
}

}  // namespace

TEST_CASE("PCC follows the analytic value for each generator") {
  const double s = kDefaultNoise;
  const double pi = std::acos(-1.0);
  const double e3 = std::exp(3.0);
  struct Case {
    RelationKind kind;
    double want;
  };
  // linear_outliers: 90% on the line, 10% with y ~ U(0,1) independent of x.
  const double lo_cov = 0.9 / 12.0;
  const double lo_var = 1.0 / 12.0 + 0.9 * s * s;
  const std::vector<Case> cases{
      {RelationKind::linear, functional_pcc([](double t) { return t; }, s)},
      {RelationKind::linear_outliers, lo_cov / (std::sqrt(1.0 / 12.0) * std::sqrt(lo_var))},
      {RelationKind::exponential, functional_pcc([&](double t) { return (std::exp(3.0 * t) - 1.0) / (e3 - 1.0); }, s)},
      {RelationKind::quadratic, functional_pcc([](double t) { return 4.0 * (t - 0.5) * (t - 0.5); }, s)},
      {RelationKind::sine, functional_pcc([&](double t) { return 0.5 + 0.4 * std::sin(4.0 * pi * t); }, s)},
  };
  for (const Case& c : cases) {
    CAPTURE(to_string(c.kind));
    double mean = 0.0;
    for (unsigned seed = 0; seed < 5; ++seed) mean += pearson(gen_relation(c.kind, 5000, s, seed)) / 5.0;
    CHECK(std::abs(mean - c.want) <= 0.02);
  }
}

TEST_CASE("relation pattern at n = 5000 for the attainable parts") {
  double base = 0.0;
  for (unsigned seed = 0; seed < 10; ++seed) base += mi_of(gen_relation(RelationKind::independent, 5000, kDefaultNoise, seed)) / 10.0;
  const std::vector<RelationKind> table{RelationKind::linear,  RelationKind::exponential, RelationKind::quadratic,
                                        RelationKind::diamond, RelationKind::circle,      RelationKind::sine,
                                        RelationKind::cross};
  for (const RelationKind k : table) {
    const SeriesPair p = gen_relation(k, 5000, kDefaultNoise, 11);
    CAPTURE(to_string(k));
    CHECK(mi_of(p) > 5.0 * base);
    CHECK(mi_of(p) > 0.3);
    CHECK(dcor(p) > 0.1);
  }
  CHECK(std::abs(pearson(gen_relation(RelationKind::linear, 5000, kDefaultNoise, 11))) >= 0.9);
  for (const RelationKind k : {RelationKind::quadratic, RelationKind::diamond, RelationKind::circle, RelationKind::cross}) {
    CAPTURE(to_string(k));
    CHECK(std::abs(pearson(gen_relation(k, 5000, kDefaultNoise, 11))) <= 0.15);
  }
}
