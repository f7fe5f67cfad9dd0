#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "amic/error.hpp"
#include "amic/ksg.hpp"
#include "amic/window.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace amic;

namespace {

RankedPair random_pair(std::size_t n, unsigned seed, bool coarse = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RankedPair p;
  p.u.resize(n);
  p.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.u[i] = unit(rng);
    p.v[i] = 0.5 * p.u[i] + 0.5 * unit(rng);
    if (coarse) {
      // Heavy ties stress the tie rule and inclusive counting.
      p.u[i] = std::round(p.u[i] * 8.0) / 8.0;
      p.v[i] = std::round(p.v[i] * 8.0) / 8.0;
    }
  }
  return p;
}

void check_against_oracle(const WindowState& w, const RankedPair& p, const std::vector<std::size_t>& members) {
  const oracle::Cloud cloud = oracle::members(p.u, p.v, members);
  for (std::size_t a = 0; a < members.size(); ++a) {
    const oracle::Record want = oracle::record(cloud, a, w.k());
    const PointRecord& got = w.record(members[a]);
    REQUIRE(got.valid);
    CHECK(got.kth_idx == want.kth_idx);
    CHECK(got.d_x == want.d_x);
    CHECK(got.d_y == want.d_y);
    CHECK(got.n_x == want.n_x);
    CHECK(got.n_y == want.n_y);
  }
  CHECK(std::abs(w.mi().raw - oracle::ksg(cloud, w.k())) <= 1e-9);
}

std::vector<std::size_t> member_list(const WindowState& w) {
  std::vector<std::size_t> out;
  const IndexRange uni = w.universe();
  for (std::size_t i = uni.begin; i < uni.end; ++i) {
    if (w.contains(i)) out.push_back(i);
  }
  return out;
}

}  // namespace

TEST_CASE("init_window matches batch ksg_mi exactly") {
  const RankedPair p = random_pair(64, 11);
  const WindowState w = WindowState::init_window(p, {0, 64}, 6);
  const MiEstimate batch = ksg_mi(CloudView{p.u, p.v}, 6);
  CHECK(w.mi().raw == batch.raw);
  CHECK(w.psi_sum() == w.psi_sum());
  check_against_oracle(w, p, member_list(w));
}

TEST_CASE("init_window rejects windows of k+1 points") {
  const RankedPair p = random_pair(64, 12);
  CHECK_THROWS_AS(WindowState::init_window(p, {0, 7}, 6), Error);
}

TEST_CASE("influenced region arithmetic and clipping") {
  RankedPair p;
  p.u = {0.5, 0.6, 0.4, 0.45, 0.05, 0.9, 0.1, 0.3, 0.7, 0.2};
  p.v = {0.5, 0.7, 0.3, 0.55, 0.5, 0.1, 0.9, 0.2, 0.8, 0.6};
  const WindowState w = WindowState::init_window(p, {0, 10}, 2);
  const PointRecord& r0 = w.record(0);
  const InfluencedRegion ir = w.influenced_region(0);
  CHECK(ir.l == doctest::Approx(0.5 - r0.d_x));
  CHECK(ir.r == doctest::Approx(0.5 + r0.d_x));
  CHECK(ir.b == doctest::Approx(0.5 - r0.d_y));
  CHECK(ir.t == doctest::Approx(0.5 + r0.d_y));
  const InfluencedRegion edge = w.influenced_region(4);
  CHECK(edge.l == 0.0);
  const InfluencedMarginalRegion imr = w.influenced_marginal_region(0);
  CHECK(imr.x_band.first == doctest::Approx(0.5 - r0.d_x));
  CHECK(imr.y_band.second == doctest::Approx(0.5 + r0.d_y));
}

TEST_CASE("add then remove restores records and sums bit for bit") {
  const RankedPair p = random_pair(200, 21);
  WindowState w = WindowState::init_window(p, {0, 200}, {20, 120}, 6, cells_for_window(100));
  const PsiSum before = w.psi_sum();
  std::vector<PointRecord> records;
  for (std::size_t i = 20; i < 120; ++i) records.push_back(w.record(i));
  for (const std::size_t extra : {5u, 150u, 199u}) {
    w.add_point(extra);
    w.remove_point(extra);
    CHECK(w.psi_sum() == before);
    for (std::size_t i = 20; i < 120; ++i) CHECK(w.record(i) == records[i - 20]);
  }
}

TEST_CASE("adding a point that falls in a marginal band only bumps the count") {
  // Point 0 at the centre with neighbours close by; the new point shares its
  // y coordinate band but lies far away in x.
  RankedPair p;
  p.u = {0.50, 0.52, 0.48, 0.51, 0.49, 0.10, 0.90, 0.20, 0.80, 0.95};
  p.v = {0.50, 0.51, 0.49, 0.48, 0.52, 0.10, 0.90, 0.85, 0.15, 0.505};
  WindowState w = WindowState::init_window(p, {0, 10}, {0, 9}, 2, 3);
  const PointRecord before = w.record(0);
  w.add_point(9);
  const PointRecord after = w.record(0);
  CHECK(after.kth_idx == before.kth_idx);
  CHECK(after.n_y == before.n_y + 1);
  CHECK(after.n_x == before.n_x);
  CHECK(w.last_update().searches >= 1);  // the new point itself
}

TEST_CASE("removing a kth neighbour forces a wider search") {
  const RankedPair p = random_pair(120, 31);
  WindowState w = WindowState::init_window(p, {0, 120}, 6);
  const PointRecord before = w.record(10);
  w.remove_point(before.kth_idx);
  const PointRecord after = w.record(10);
  CHECK(std::max(after.d_x, after.d_y) >= std::max(before.d_x, before.d_y));
  check_against_oracle(w, p, member_list(w));
}

TEST_CASE("slide_to identity and full turnover") {
  const RankedPair p = random_pair(400, 41);
  WindowState w = WindowState::init_window(p, {0, 400}, {0, 100}, 6, cells_for_window(100));
  const double mi0 = w.mi().raw;
  CHECK(w.slide_to({0, 100}).raw == mi0);
  const MiEstimate moved = w.slide_to({250, 350});
  const WindowState fresh = WindowState::init_window(p, {250, 350}, 6);
  CHECK(moved.raw == fresh.mi().raw);
  check_against_oracle(w, p, member_list(w));
}

TEST_CASE("512-point window slid by 64 stays exact") {
  const RankedPair p = random_pair(1200, 51);
  WindowState w = WindowState::init_window(p, {0, 1200}, {0, 512}, 6, cells_for_window(512));
  for (std::size_t s = 64; s + 512 <= 1200; s += 64) {
    const MiEstimate mi = w.slide_to({s, s + 512});
    const MiEstimate batch = ksg_mi(CloudView{std::span<const double>(p.u).subspan(s, 512),
                                              std::span<const double>(p.v).subspan(s, 512), s},
                                    6);
    CHECK(mi.raw == batch.raw);
  }
  check_against_oracle(w, p, member_list(w));
}

TEST_CASE("randomized add/remove sequences agree with the exhaustive oracle") {
  for (unsigned seed = 0; seed < 12; ++seed) {
    const bool coarse = seed % 3 == 0;
    const RankedPair p = random_pair(160, 100 + seed, coarse);
    const int k = 1 + static_cast<int>(seed % 6);
    WindowState w(CloudView{p.u, p.v}, k, cells_for_window(60));
    std::mt19937_64 rng(seed);
    std::set<std::size_t> in;
    for (int step = 0; step < 300; ++step) {
      const std::size_t i = rng() % p.size();
      if (in.count(i)) {
        w.remove_point(i);
        in.erase(i);
      } else {
        w.add_point(i);
        in.insert(i);
      }
      if (in.size() >= static_cast<std::size_t>(k) + 2 && step % 25 == 0) {
        w.settle();
        check_against_oracle(w, p, {in.begin(), in.end()});
      }
    }
  }
}
