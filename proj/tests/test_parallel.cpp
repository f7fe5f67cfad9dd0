#include <algorithm>
#include <random>
#include <vector>

#include "amic/error.hpp"
#include "amic/parallel.hpp"
#include "amic/synth.hpp"
#include "doctest.h"

using namespace amic;

namespace {

std::vector<IndexRange> spans(const SearchResult& r) {
  std::vector<IndexRange> out;
  for (const WindowResult& w : r.windows) out.push_back(w.span());
  return out;
}

WindowResult bare(std::size_t s, std::size_t e, std::size_t g = 0) {
  WindowResult w;
  w.s_idx = s;
  w.e_idx = e;
  w.granularity = g == 0 ? e - s : g;
  return w;
}

std::vector<IndexRange> merged_spans(const std::vector<WindowResult>& ws) {
  std::vector<IndexRange> out;
  for (const WindowResult& w : ws) out.push_back(w.span());
  return out;
}

bool same(const WindowResult& a, const WindowResult& b) {
  return a.s_idx == b.s_idx && a.e_idx == b.e_idx && a.start_ts == b.start_ts && a.end_ts == b.end_ts &&
         a.granularity == b.granularity && a.mi_raw == b.mi_raw && a.mi == b.mi && a.h_w == b.h_w &&
         a.h_norm == b.h_norm && a.nmi1 == b.nmi1 && a.nmi2 == b.nmi2 && a.mu == b.mu && a.sign == b.sign &&
         a.confidence == b.confidence;
}

}  // namespace

TEST_CASE("make_partitions examples") {
  const std::vector<Partition> a = make_partitions(1000, 100, 2);
  std::vector<IndexRange> ranges;
  for (const Partition& p : a) ranges.push_back(p.range());
  CHECK(ranges == std::vector<IndexRange>{{0, 200}, {100, 400}, {300, 600}, {500, 800}, {700, 1000}});
  CHECK(a.front().start == -100);
  CHECK(a.front().clamped_start == 0);

  const std::vector<Partition> single = make_partitions(300, 300, 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0].range() == IndexRange{0, 300});

  std::vector<IndexRange> tail;
  for (const Partition& p : make_partitions(250, 100, 2)) tail.push_back(p.range());
  CHECK(tail == std::vector<IndexRange>{{0, 200}, {100, 250}});

  CHECK_THROWS_AS(make_partitions(100, 0, 1), Error);
  CHECK_THROWS_AS(make_partitions(100, 10, 0), Error);
}

TEST_CASE("partitions cover the series with one-window overlaps") {
  for (const std::size_t n : {1u, 2u, 3u, 7u}) {
    const std::vector<Partition> parts = make_partitions(10007, 97, n);
    CHECK(parts.front().clamped_start == 0);
    CHECK(parts.back().end == 10007);
    for (std::size_t i = 1; i < parts.size(); ++i) {
      CHECK(parts[i].clamped_start + 97 == parts[i - 1].end);
    }
  }
}

TEST_CASE("merge_windows examples") {
  const RankedPair p = rank_transform(gen_relation(RelationKind::sine, 200, kDefaultNoise, 2));
  const std::vector<WindowResult> m = merge_windows({bare(10, 50), bare(30, 80)}, p, 6);
  REQUIRE(m.size() == 1);
  CHECK(m[0].span() == IndexRange{10, 80});
  CHECK(m[0].granularity == 50);
  CHECK(same(m[0], describe_window(p, {10, 80}, 50, 6)));

  const std::vector<WindowResult> dup = merge_windows({bare(20, 60), bare(20, 60)}, p, 6);
  REQUIRE(dup.size() == 1);
  CHECK(dup[0].span() == IndexRange{20, 60});

  const std::vector<WindowResult> apart = merge_windows({bare(120, 160), bare(10, 50)}, p, 6);
  CHECK(merged_spans(apart) == std::vector<IndexRange>{{10, 50}, {120, 160}});

  const std::vector<WindowResult> touching = merge_windows({bare(10, 50), bare(50, 90)}, p, 6);
  CHECK(merged_spans(touching) == std::vector<IndexRange>{{10, 90}});
  CHECK(merge_windows({}, p, 6).empty());
}

TEST_CASE("merge_windows is idempotent and order-free") {
  const RankedPair p = rank_transform(gen_relation(RelationKind::circle, 1000, kDefaultNoise, 5));
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<WindowResult> ws;
    const int count = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < count; ++i) {
      const std::size_t s = rng() % 900;
      const std::size_t len = 24 + rng() % 76;
      ws.push_back(bare(s, s + len));
    }
    const std::vector<WindowResult> once = merge_windows(ws, p, 6);
    const std::vector<WindowResult> twice = merge_windows(once, p, 6);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(same(once[i], twice[i]));
    std::shuffle(ws.begin(), ws.end(), rng);
    const std::vector<WindowResult> shuffled = merge_windows(ws, p, 6);
    REQUIRE(once.size() == shuffled.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(same(once[i], shuffled[i]));
    for (std::size_t i = 1; i < once.size(); ++i) CHECK(once[i - 1].e_idx < once[i].s_idx);
  }
}

TEST_CASE("parallel search equals the serial reference") {
  const Composition comp =
      compose({RelationKind::sine, RelationKind::cross, RelationKind::quadratic, RelationKind::linear}, 1500, 800, 21);
  const RankedPair p = rank_transform(comp.pair);
  for (const ThresholdStrategy& s : std::vector<ThresholdStrategy>{TwoStepThreshold{}, AbsoluteThreshold{0.35}}) {
    SearchConfig serial;
    serial.threshold = s;
    const SearchResult want = layered_search(p, serial);
    REQUIRE(!want.windows.empty());
    for (const std::size_t parts : {1u, 2u, 3u, 4u, 8u}) {
      for (const std::size_t workers : {1u, 4u}) {
        SearchConfig c = serial;
        c.partitions = parts;
        c.workers = workers;
        ParallelStats stats;
        const SearchResult got = recursive_parallel_search(p, c, &stats);
        CAPTURE(parts);
        CAPTURE(workers);
        CHECK(spans(got) == spans(want));
        CHECK(got.leftout == want.leftout);
        CHECK(got.layers_run == want.layers_run);
        REQUIRE(got.windows.size() == want.windows.size());
        for (std::size_t i = 0; i < got.windows.size(); ++i) CHECK(same(got.windows[i], want.windows[i]));
        CHECK(stats.tasks >= want.layers_run.size());
      }
    }
  }
}

TEST_CASE("a relation across a partition boundary is reported once") {
  // Segment [0, 4000), g = 500, two partitions of n = 4 windows: the boundary
  // sits at 2000 with overlap [1500, 2000). The relation covers [1700, 2600).
  SeriesPair base = gen_relation(RelationKind::independent, 4000, kDefaultNoise, 3);
  const SeriesPair line = gen_relation(RelationKind::linear, 900, kDefaultNoise, 4);
  std::copy(line.x.begin(), line.x.end(), base.x.begin() + 1700);
  std::copy(line.y.begin(), line.y.end(), base.y.begin() + 1700);
  const RankedPair p = rank_transform(base);
  SearchConfig c;
  c.ladder = {500, 250, 125};
  c.threshold = AbsoluteThreshold{0.3};
  const SearchResult want = layered_search(p, c);
  c.partitions = 2;
  c.workers = 2;
  const SearchResult got = recursive_parallel_search(p, c);
  CHECK(spans(got) == spans(want));
  std::size_t hits = 0;
  for (const WindowResult& w : got.windows) {
    if (w.s_idx < 2600 && w.e_idx > 1700) ++hits;
  }
  CHECK(hits == 1);
}
