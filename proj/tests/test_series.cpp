#include <cmath>
#include <filesystem>
#include <fstream>

#include "amic/error.hpp"
#include "amic/series.hpp"
#include "doctest.h"

using namespace amic;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("amic_series_" + name);
  std::ofstream(path) << body;
  return path;
}

RawSeries make(std::vector<Timestamp> ts, std::vector<double> v) { return RawSeries{std::move(ts), std::move(v)}; }

}  // namespace

TEST_CASE("load_series parses epoch and RFC 3339 rows") {
  const RawSeries s = load_series(write_file("three.csv", "timestamp,value\n0,1\n60,2.5\n120,3\n"));
  CHECK(s.size() == 3);
  CHECK(s.timestamps[1] == 60);
  CHECK(s.values[1] == 2.5);

  const RawSeries r = load_series(write_file("rfc.csv", "timestamp,value\n2012-10-29T00:00:00Z,512\n"));
  REQUIRE(r.size() == 1);
  CHECK(r.timestamps[0] == 1351468800);
  CHECK(r.values[0] == 512.0);
}

TEST_CASE("load_series rejects a header-only file") {
  CHECK_THROWS_AS(load_series(write_file("empty.csv", "timestamp,value\n")), Error);
  CHECK_THROWS_AS(load_series("/nonexistent/amic.csv"), Error);
}

TEST_CASE("save then load round-trips") {
  const RawSeries s = make({1351468800, 1351468860}, {0.1, -2.75});
  const auto path = std::filesystem::temp_directory_path() / "amic_series_round.csv";
  save_series(path, s);
  const RawSeries back = load_series(path);
  CHECK(back.timestamps == s.timestamps);
  CHECK(back.values == s.values);
}

TEST_CASE("timestamp parsing") {
  CHECK(parse_timestamp("2012-10-29T00:00:00Z") == 1351468800);
  CHECK(parse_timestamp("2012-10-29T02:00:00+02:00") == 1351468800);
  CHECK(parse_timestamp("1351468800") == 1351468800);
  CHECK(format_timestamp(1351468800) == "2012-10-29T00:00:00Z");
}

TEST_CASE("clean deduplicates and interpolates") {
  const RawSeries a = clean(make({0, 0, 10}, {1.0, 9.0, 3.0}), 5);
  CHECK(a.timestamps == std::vector<Timestamp>{0, 5, 10});
  CHECK(a.values == std::vector<double>{1.0, 2.0, 3.0});

  const RawSeries b = clean(make({0, 30}, {0.0, 3.0}), 10);
  CHECK(b.values == std::vector<double>{0.0, 1.0, 2.0, 3.0});

  const RawSeries regular = make({0, 10, 20}, {4.0, 5.0, 6.0});
  const RawSeries same = clean(regular, 10);
  CHECK(same.timestamps == regular.timestamps);
  CHECK(same.values == regular.values);
}

TEST_CASE("resample buckets by mean or sum") {
  const RawSeries m = resample(make({0, 1, 2, 3}, {1, 2, 3, 4}), 2, Aggregator::mean);
  CHECK(m.values == std::vector<double>{1.5, 3.5});

  std::vector<Timestamp> ts;
  std::vector<double> v;
  for (int h = 0; h < 48; ++h) {
    ts.push_back(h * 3600);
    v.push_back(1.0);
  }
  const RawSeries daily = resample(make(ts, v), 86400, Aggregator::sum);
  CHECK(daily.values == std::vector<double>{24.0, 24.0});

  const RawSeries native = make({0, 10, 20}, {1, 2, 3});
  CHECK(resample(native, 10, Aggregator::mean).values == native.values);
}

TEST_CASE("align_pair intersects ranges") {
  std::vector<Timestamp> ta, tb;
  std::vector<double> va, vb;
  for (int t = 0; t <= 100; t += 10) {
    ta.push_back(t);
    va.push_back(t);
  }
  for (int t = 50; t <= 150; t += 10) {
    tb.push_back(t);
    vb.push_back(-t);
  }
  const SeriesPair p = align_pair(make(ta, va), make(tb, vb));
  CHECK(p.size() == 6);
  CHECK(p.timestamps.front() == 50);
  CHECK(p.timestamps.back() == 100);
  CHECK(p.y.front() == -50.0);

  CHECK(align_pair(make(ta, va), make(ta, va)).size() == ta.size());
  CHECK_THROWS_AS(align_pair(make({0, 10}, {1, 2}), make({100, 110}, {1, 2})), Error);
}

TEST_CASE("rank_values averages ties") {
  CHECK(rank_values({3.0, 1.0, 2.0}) == std::vector<double>{1.0, 0.0, 0.5});
  CHECK(rank_values({5, 5, 9}) == std::vector<double>{0.25, 0.25, 1.0});
}

TEST_CASE("ranks are invariant under exp") {
  std::vector<double> x;
  for (int i = 0; i < 200; ++i) x.push_back(std::sin(i * 0.37) * 3.0 + i * 0.01);
  std::vector<double> e;
  for (const double v : x) e.push_back(std::exp(v));
  CHECK(rank_values(x) == rank_values(e));
}

TEST_CASE("load_series reports the bad row") {
  try {
    load_series(write_file("bad.csv", "timestamp,value\n0,1\n60,abc\n"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find('3') != std::string::npos);
  }
}
