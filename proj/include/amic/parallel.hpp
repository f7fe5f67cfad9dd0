#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "amic/search.hpp"

namespace amic {

struct Partition {
  std::int64_t start = 0;  // before clamping, may be negative
  std::size_t end = 0;
  std::size_t clamped_start = 0;

  IndexRange range() const { return {clamped_start, end}; }
  friend bool operator==(const Partition&, const Partition&) = default;
};

// For i = 0, n*size, 2*n*size, ... < N: (i - size, min(i + n*size, N)).
// Neighbouring partitions overlap by one window of `size`.
std::vector<Partition> make_partitions(std::size_t n_samples, std::size_t size, std::size_t n);

// Sorts by start then decreasing length, coalesces overlapping or touching
// spans, and recomputes every reported statistic over the result. The
// granularity of a coalesced window is the largest of its parts.
std::vector<WindowResult> merge_windows(const std::vector<WindowResult>& windows, const RankedPair& pair, int k);

struct ParallelStats {
  std::size_t tasks = 0;
  std::size_t evaluations = 0;  // candidates evaluated by workers
  std::size_t fixups = 0;       // candidates the reducer had to evaluate itself
};

// Partitioned search. Each layer maps the partitions of every pending segment
// to workers; the reducer replays the sequential trajectory of each segment
// from the partition traces, so the output equals layered_search exactly for
// any partition or worker count.
SearchResult recursive_parallel_search(const RankedPair& pair, const SearchConfig& config,
                                       ParallelStats* stats = nullptr);

}  // namespace amic
