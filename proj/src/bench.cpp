#include "amic/bench.hpp"

#include <algorithm>

#include "amic/error.hpp"
#include "amic/synth.hpp"
#include "amic/window.hpp"

namespace amic {

BenchScan bench_scan_for(std::size_t n) {
  BenchScan scan;
  scan.window = std::min(n, std::max<std::size_t>(64, n / 10));
  scan.slide = std::max<std::size_t>(1, scan.window / 100);
  return scan;
}

RankedPair bench_data(std::size_t n, std::uint64_t seed) {
  if (n < 64) throw Error("bench: series too short");
  const std::vector<RelationKind> kinds = {RelationKind::linear,    RelationKind::sine,     RelationKind::circle,
                                           RelationKind::cross,     RelationKind::quadratic, RelationKind::diamond};
  const std::size_t n_each = std::max<std::size_t>(10, n / 8);
  const std::size_t gap = std::max<std::size_t>(10, n / 40);
  Composition comp = compose(kinds, n_each, gap, seed);
  SeriesPair& pair = comp.pair;
  if (pair.size() < n) {
    const SeriesPair tail = gen_relation(RelationKind::independent, std::max<std::size_t>(10, n - pair.size()),
                                         kDefaultNoise, seed + 1);
    pair.x.insert(pair.x.end(), tail.x.begin(), tail.x.end());
    pair.y.insert(pair.y.end(), tail.y.begin(), tail.y.end());
  }
  pair.x.resize(n);
  pair.y.resize(n);
  pair.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) pair.timestamps[i] = kSynthEpoch + static_cast<Timestamp>(i) * kSynthStep;
  return rank_transform(pair);
}

BenchRun run_bench_scan(const RankedPair& pair, const BenchScan& scan, BenchMode mode, int k) {
  if (scan.window > pair.size() || scan.slide < 1) throw Error("bench: invalid scan");
  BenchRun run;
  if (mode == BenchMode::incremental) {
    SlidingWindow window(pair, {0, pair.size()}, scan.window, k, SlidePolicy::incremental);
    for (std::size_t s = 0; s + scan.window <= pair.size(); s += scan.slide) {
      run.checksum += window.move_to(s).raw;
      ++run.windows;
    }
  } else {
    for (std::size_t s = 0; s + scan.window <= pair.size(); s += scan.slide) {
      run.checksum += WindowState::init_window(pair, {s, s + scan.window}, k).mi().raw;
      ++run.windows;
    }
  }
  return run;
}

}  // namespace amic
