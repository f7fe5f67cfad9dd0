#pragma once

#include <cstddef>
#include <cstdint>

#include "amic/series.hpp"

namespace amic {

enum class BenchMode { incremental, brute };

// The fixed sliding scan used by `amic bench`: windows of g = max(64, n/10)
// samples moved by 1% of g across the whole series.
struct BenchScan {
  std::size_t window = 0;
  std::size_t slide = 0;
};

BenchScan bench_scan_for(std::size_t n);

// Relations separated by noise gaps, padded with noise to exactly n samples.
RankedPair bench_data(std::size_t n, std::uint64_t seed);

struct BenchRun {
  std::size_t windows = 0;
  double checksum = 0.0;  // sum of raw MI over all windows
};

// Incremental mode slides one window state; brute mode computes every window
// from scratch. Both return the same checksum.
BenchRun run_bench_scan(const RankedPair& pair, const BenchScan& scan, BenchMode mode, int k = 6);

}  // namespace amic
