#include "amic/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>

#include "amic/error.hpp"

namespace amic {
namespace {

struct Task {
  std::size_t segment = 0;
  IndexRange range;
};

std::size_t windows_per_partition(std::size_t length, std::size_t partitions, std::size_t g) {
  const std::size_t per = partitions * g;
  return std::max<std::size_t>(1, (length + per - 1) / per);
}

// Replays the sequential trajectory over segment, reading outcomes from the
// merged worker trace and evaluating any position the workers did not visit.
std::vector<IndexRange> stitch(const RankedPair& pair, IndexRange segment, std::size_t g, std::size_t slide,
                               const SearchConfig& config, const std::vector<ScanStep>& steps, ParallelStats& stats) {
  std::vector<IndexRange> windows;
  std::unique_ptr<WindowScanner> fallback;
  std::size_t pos = segment.begin;
  while (pos + g <= segment.end) {
    const auto it = std::lower_bound(steps.begin(), steps.end(), pos,
                                     [](const ScanStep& s, std::size_t p) { return s.pos < p; });
    bool passed = false;
    if (it != steps.end() && it->pos == pos) {
      passed = it->passed;
    } else {
      if (!fallback) fallback = std::make_unique<WindowScanner>(pair, segment, g, config.k);
      passed = fallback->evaluate(pos, config.threshold);
      ++stats.fixups;
    }
    if (passed) {
      windows.push_back({pos, pos + g});
      pos += g;
    } else {
      pos += slide;
    }
  }
  return windows;
}

}  // namespace

std::vector<Partition> make_partitions(std::size_t n_samples, std::size_t size, std::size_t n) {
  if (size == 0 || n == 0) throw Error("make_partitions: size and n must be >= 1");
  if (size > n_samples) throw Error("make_partitions: window size exceeds the series length");
  std::vector<Partition> parts;
  const std::size_t step = n * size;
  for (std::size_t i = 0; i < n_samples; i += step) {
    Partition p;
    p.start = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(size);
    p.end = std::min(i + step, n_samples);
    p.clamped_start = p.start < 0 ? 0 : static_cast<std::size_t>(p.start);
    parts.push_back(p);
  }
  return parts;
}

std::vector<WindowResult> merge_windows(const std::vector<WindowResult>& windows, const RankedPair& pair, int k) {
  std::vector<WindowResult> sorted = windows;
  std::sort(sorted.begin(), sorted.end(), [](const WindowResult& a, const WindowResult& b) {
    if (a.s_idx != b.s_idx) return a.s_idx < b.s_idx;
    if (a.e_idx != b.e_idx) return a.e_idx > b.e_idx;
    return a.granularity > b.granularity;
  });

  std::vector<std::pair<IndexRange, std::size_t>> spans;
  for (const WindowResult& w : sorted) {
    if (w.s_idx >= w.e_idx) throw Error("merge_windows: empty window");
    if (!spans.empty() && w.s_idx <= spans.back().first.end) {
      auto& last = spans.back();
      last.first.end = std::max(last.first.end, w.e_idx);
      last.second = std::max(last.second, w.granularity);
    } else {
      spans.push_back({{w.s_idx, w.e_idx}, w.granularity});
    }
  }

  std::vector<WindowResult> merged(spans.size());
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(spans.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      merged[i] = describe_window(pair, spans[i].first, spans[i].second, k);
    } catch (...) {
#pragma omp critical(amic_merge_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return merged;
}

SearchResult recursive_parallel_search(const RankedPair& pair, const SearchConfig& config, ParallelStats* stats_out) {
  validate(config.threshold);
  if (config.workers < 1) throw Error("search: workers must be >= 1");
  if (config.partitions < 1) throw Error("search: partitions must be >= 1");
  const std::vector<std::size_t> ladder = resolve_ladder(config, pair.size());

  ParallelStats stats;
  SearchResult result;
  std::vector<WindowResult> found;
  std::vector<IndexRange> segments{{0, pair.size()}};

  for (const std::size_t g : ladder) {
    if (segments.empty()) break;
    const std::size_t slide = slide_for(g, config.slide_frac);

    std::vector<Task> tasks;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const IndexRange seg = segments[s];
      if (seg.size() < g) continue;
      const std::size_t n = windows_per_partition(seg.size(), config.partitions, g);
      for (const Partition& p : make_partitions(seg.size(), g, n)) {
        tasks.push_back({s, {seg.begin + p.clamped_start, seg.begin + p.end}});
      }
    }
    if (tasks.empty()) continue;
    result.layers_run.push_back(g);
    stats.tasks += tasks.size();

    // Map.
    std::vector<std::vector<ScanStep>> traces(tasks.size());
    std::exception_ptr failure;
    const auto task_count = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for num_threads(static_cast<int>(config.workers)) schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < task_count; ++t) {
      try {
        traces[t] = scan_layer(pair, tasks[t].range, g, slide, config.threshold, config.k).trace;
      } catch (...) {
#pragma omp critical(amic_map_error)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);

    // Reduce, in segment order.
    std::vector<IndexRange> next;
    std::size_t t = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const IndexRange seg = segments[s];
      if (seg.size() < g) {
        next.push_back(seg);
        continue;
      }
      std::vector<ScanStep> steps;
      for (; t < tasks.size() && tasks[t].segment == s; ++t) {
        stats.evaluations += traces[t].size();
        steps.insert(steps.end(), traces[t].begin(), traces[t].end());
      }
      std::stable_sort(steps.begin(), steps.end(), [](const ScanStep& a, const ScanStep& b) { return a.pos < b.pos; });
      steps.erase(std::unique(steps.begin(), steps.end(),
                              [](const ScanStep& a, const ScanStep& b) { return a.pos == b.pos; }),
                  steps.end());
      const std::vector<IndexRange> windows = stitch(pair, seg, g, slide, config, steps, stats);
      for (const IndexRange& w : windows) {
        WindowResult r;
        r.s_idx = w.begin;
        r.e_idx = w.end;
        r.granularity = g;
        found.push_back(r);
      }
      split_segment(seg, windows, next);
    }
    segments = std::move(next);
  }

  std::sort(segments.begin(), segments.end());
  result.leftout = std::move(segments);
  result.windows = merge_windows(found, pair, config.k);
  if (stats_out != nullptr) *stats_out = stats;
  return result;
}

}  // namespace amic
