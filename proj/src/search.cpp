#include "amic/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amic/error.hpp"
#include "amic/parallel.hpp"

namespace amic {
namespace {

constexpr int kTuneRounds = 20;
constexpr double kCoverageTolerance = 0.05;

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

const InnerThreshold* inner_of(const ThresholdStrategy& strategy) {
  if (const auto* c = std::get_if<CoverageThreshold>(&strategy)) return &c->inner;
  return nullptr;
}

bool needs_entropy(const ThresholdStrategy& strategy) {
  if (std::holds_alternative<TwoStepThreshold>(strategy)) return true;
  const InnerThreshold* inner = inner_of(strategy);
  return inner != nullptr && std::holds_alternative<TwoStepThreshold>(*inner);
}

bool passes_two_step(const TwoStepThreshold& t, const WindowStats& s) {
  if (s.h_norm < t.sigma_h) return false;
  const double nmi = t.norm == NmiNorm::max_entropy ? s.nmi1 : s.nmi2;
  return nmi >= t.sigma_i;
}

bool passes_inner(const InnerThreshold& inner, const WindowStats& s) {
  if (const auto* a = std::get_if<AbsoluteThreshold>(&inner)) return s.mi >= a->sigma;
  return passes_two_step(std::get<TwoStepThreshold>(inner), s);
}

CloudView window_view(const RankedPair& pair, IndexRange w) {
  return CloudView{std::span<const double>(pair.u).subspan(w.begin, w.size()),
                   std::span<const double>(pair.v).subspan(w.begin, w.size()), w.begin};
}

struct Marginals {
  double hx = 0.0;
  double hy = 0.0;
};

Marginals batch_marginals(const RankedPair& pair, IndexRange w) {
  const std::size_t bins = entropy_bins(w.size());
  return {plugin_entropy(std::span<const double>(pair.u).subspan(w.begin, w.size()), bins),
          plugin_entropy(std::span<const double>(pair.v).subspan(w.begin, w.size()), bins)};
}

void check_segment(const RankedPair& pair, IndexRange segment) {
  if (segment.empty() || segment.end > pair.size()) throw Error("search: segment outside the series");
}

}  // namespace

void validate(const ThresholdStrategy& strategy) {
  auto check_inner = [](const InnerThreshold& inner) {
    if (const auto* a = std::get_if<AbsoluteThreshold>(&inner)) {
      if (!(a->sigma >= 0.0)) throw Error("threshold: sigma must be >= 0");
    } else {
      const auto& t = std::get<TwoStepThreshold>(inner);
      if (!in_unit(t.sigma_h) || !in_unit(t.sigma_i)) throw Error("threshold: sigma_h and sigma_i must lie in [0,1]");
    }
  };
  if (const auto* c = std::get_if<CoverageThreshold>(&strategy)) {
    if (!in_unit(c->target)) throw Error("threshold: coverage target must lie in [0,1]");
    check_inner(c->inner);
  } else if (const auto* a = std::get_if<AbsoluteThreshold>(&strategy)) {
    check_inner(*a);
  } else {
    check_inner(std::get<TwoStepThreshold>(strategy));
  }
}

WindowStats window_stats(const MiEstimate& mi, double hx, double hy, std::size_t n) {
  WindowStats s;
  s.mi = mi.clamped;
  s.h_w = window_entropy(mi, hx, hy, n);
  s.h_norm = normalized_entropy(s.h_w, n);
  s.nmi1 = nmi_max(mi, n);
  s.nmi2 = nmi_entropy(mi, s.h_w);
  return s;
}

bool evaluate_threshold(const ThresholdStrategy& strategy, const WindowStats& stats) {
  if (const auto* a = std::get_if<AbsoluteThreshold>(&strategy)) return stats.mi >= a->sigma;
  if (const auto* t = std::get_if<TwoStepThreshold>(&strategy)) return passes_two_step(*t, stats);
  return passes_inner(std::get<CoverageThreshold>(strategy).inner, stats);
}

std::size_t SearchConfig::min_window_size() const {
  return std::max<std::size_t>(static_cast<std::size_t>(k) + 2, min_window);
}

std::vector<std::size_t> halving_ladder(std::size_t n, std::size_t n_min) {
  if (n_min < 1) throw Error("ladder: minimum window must be >= 1");
  if (n < n_min) throw Error("ladder: series shorter than the minimum window");
  std::vector<std::size_t> ladder;
  for (std::size_t g = n / 4; g >= n_min; g /= 2) ladder.push_back(g);
  if (ladder.empty() || ladder.back() != n_min) ladder.push_back(n_min);
  return ladder;
}

std::vector<std::size_t> resolve_ladder(const SearchConfig& config, std::size_t n) {
  if (config.k < 1) throw Error("search: k must be >= 1");
  const std::size_t n_min = config.min_window_size();
  if (config.ladder.empty()) return halving_ladder(n, n_min);
  for (std::size_t i = 0; i < config.ladder.size(); ++i) {
    if (config.ladder[i] < n_min) throw Error("ladder: sizes must be >= max(k+2, min window)");
    if (i > 0 && config.ladder[i] >= config.ladder[i - 1]) throw Error("ladder: sizes must be strictly decreasing");
  }
  if (config.ladder.front() > n) throw Error("ladder: largest window exceeds the series length");
  return config.ladder;
}

std::size_t slide_for(std::size_t g, double slide_frac) {
  if (!(slide_frac > 0.0 && slide_frac <= 1.0)) throw Error("slide fraction must lie in (0,1]");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(g) * slide_frac)));
}

WindowScanner::WindowScanner(const RankedPair& pair, IndexRange universe, std::size_t g, int k)
    : pair_(pair),
      g_(g),
      bins_(entropy_bins(g)),
      window_(pair, universe, g, k),
      hx_(bins_, 0),
      hy_(bins_, 0) {
  check_segment(pair, universe);
  if (universe.size() < g) throw Error("scanner: universe shorter than the window");
}

void WindowScanner::bump(std::size_t i, int delta) {
  hx_[entropy_bin(pair_.u[i], bins_)] += static_cast<std::uint32_t>(delta);
  hy_[entropy_bin(pair_.v[i], bins_)] += static_cast<std::uint32_t>(delta);
}

void WindowScanner::move_histograms(IndexRange next) {
  const IndexRange prev = hist_range_;
  const IndexRange overlap{std::max(prev.begin, next.begin), std::min(prev.end, next.end)};
  if (overlap.empty()) {
    std::fill(hx_.begin(), hx_.end(), 0);
    std::fill(hy_.begin(), hy_.end(), 0);
    for (std::size_t i = next.begin; i < next.end; ++i) bump(i, 1);
  } else {
    for (std::size_t i = prev.begin; i < overlap.begin; ++i) bump(i, -1);
    for (std::size_t i = overlap.end; i < prev.end; ++i) bump(i, -1);
    for (std::size_t i = next.begin; i < overlap.begin; ++i) bump(i, 1);
    for (std::size_t i = overlap.end; i < next.end; ++i) bump(i, 1);
  }
  hist_range_ = next;
}

bool WindowScanner::evaluate(std::size_t pos, const ThresholdStrategy& strategy) {
  const IndexRange next{pos, pos + g_};
  const MiEstimate mi = window_.move_to(pos);
  WindowStats stats;
  stats.mi = mi.clamped;
  if (needs_entropy(strategy)) {
    move_histograms(next);
    stats = window_stats(mi, entropy_from_counts(hx_, g_), entropy_from_counts(hy_, g_), g_);
  }
  return evaluate_threshold(strategy, stats);
}

bool evaluate_window(const RankedPair& pair, IndexRange window, int k, const ThresholdStrategy& strategy) {
  check_segment(pair, window);
  const MiEstimate mi = ksg_mi(window_view(pair, window), k);
  WindowStats stats;
  stats.mi = mi.clamped;
  if (needs_entropy(strategy)) {
    const Marginals m = batch_marginals(pair, window);
    stats = window_stats(mi, m.hx, m.hy, window.size());
  }
  return evaluate_threshold(strategy, stats);
}

void split_segment(IndexRange segment, std::span<const IndexRange> windows, std::vector<IndexRange>& leftout) {
  std::size_t cursor = segment.begin;
  for (const IndexRange& w : windows) {
    if (w.begin > cursor) leftout.push_back({cursor, w.begin});
    cursor = std::max(cursor, w.end);
  }
  if (cursor < segment.end) leftout.push_back({cursor, segment.end});
}

LayerScan scan_layer(const RankedPair& pair, IndexRange segment, std::size_t g, std::size_t slide,
                     const ThresholdStrategy& strategy, int k) {
  check_segment(pair, segment);
  if (slide < 1) throw Error("scan_layer: slide must be >= 1");
  LayerScan scan;
  if (segment.size() < g) {
    scan.leftout.push_back(segment);
    return scan;
  }
  WindowScanner scanner(pair, segment, g, k);
  std::size_t pos = segment.begin;
  while (pos + g <= segment.end) {
    const bool passed = scanner.evaluate(pos, strategy);
    scan.trace.push_back({pos, passed});
    if (passed) {
      scan.windows.push_back({pos, pos + g});
      pos += g;
    } else {
      pos += slide;
    }
  }
  split_segment(segment, scan.windows, scan.leftout);
  return scan;
}

WindowResult describe_window(const RankedPair& pair, IndexRange span, std::size_t granularity, int k) {
  check_segment(pair, span);
  if (span.size() < static_cast<std::size_t>(k) + 2) throw Error("describe_window: window smaller than k+2");
  const MiEstimate mi = ksg_mi(window_view(pair, span), k);
  const Marginals m = batch_marginals(pair, span);
  const WindowStats stats = window_stats(mi, m.hx, m.hy, span.size());
  const AssociationStats assoc = associate(std::span<const double>(pair.u).subspan(span.begin, span.size()),
                                           std::span<const double>(pair.v).subspan(span.begin, span.size()));
  WindowResult w;
  w.s_idx = span.begin;
  w.e_idx = span.end;
  if (pair.source.timestamps.size() == pair.size()) {
    w.start_ts = pair.source.timestamps[span.begin];
    w.end_ts = pair.source.timestamps[span.end - 1];
  }
  w.granularity = granularity;
  w.mi_raw = mi.raw;
  w.mi = mi.clamped;
  w.h_w = stats.h_w;
  w.h_norm = stats.h_norm;
  w.nmi1 = stats.nmi1;
  w.nmi2 = stats.nmi2;
  w.mu = assoc.mu;
  w.sign = assoc.sign;
  w.confidence = assoc.confidence;
  return w;
}

SearchResult layered_search(const RankedPair& pair, const SearchConfig& config) {
  validate(config.threshold);
  const std::vector<std::size_t> ladder = resolve_ladder(config, pair.size());
  SearchResult result;
  std::vector<WindowResult> found;
  std::vector<IndexRange> segments{{0, pair.size()}};
  for (const std::size_t g : ladder) {
    if (segments.empty()) break;
    const std::size_t slide = slide_for(g, config.slide_frac);
    std::vector<IndexRange> next;
    bool scanned = false;
    for (const IndexRange& seg : segments) {
      if (seg.size() < g) {
        next.push_back(seg);
        continue;
      }
      scanned = true;
      LayerScan scan = scan_layer(pair, seg, g, slide, config.threshold, config.k);
      for (const IndexRange& w : scan.windows) {
        WindowResult r;
        r.s_idx = w.begin;
        r.e_idx = w.end;
        r.granularity = g;
        found.push_back(r);
      }
      next.insert(next.end(), scan.leftout.begin(), scan.leftout.end());
    }
    if (scanned) result.layers_run.push_back(g);
    segments = std::move(next);
  }
  std::sort(segments.begin(), segments.end());
  result.leftout = std::move(segments);
  result.windows = merge_windows(found, pair, config.k);
  return result;
}

double data_coverage(std::size_t selected, std::size_t n) {
  if (n == 0) throw Error("data_coverage: empty series");
  return static_cast<double>(selected) / static_cast<double>(n);
}

double data_coverage(const SearchResult& result, std::size_t n) {
  std::size_t selected = 0;
  for (const WindowResult& w : result.windows) selected += w.e_idx - w.s_idx;
  return data_coverage(selected, n);
}

CoverageTuning tune_sigma_for_coverage(const RankedPair& pair, const SearchConfig& config, double target) {
  if (!in_unit(target)) throw Error("coverage target must lie in [0,1]");
  InnerThreshold inner = AbsoluteThreshold{};
  if (const InnerThreshold* given = inner_of(config.threshold)) {
    inner = *given;
  } else if (const auto* t = std::get_if<TwoStepThreshold>(&config.threshold)) {
    inner = *t;
  }
  const bool absolute = std::holds_alternative<AbsoluteThreshold>(inner);

  double lo = 0.0;
  double hi = 1.0;
  if (absolute) hi = ksg_mi(CloudView{pair.u, pair.v}, config.k).clamped + 1.0;

  CoverageTuning best;
  double best_gap = std::numeric_limits<double>::infinity();
  SearchConfig run = config;
  for (int round = 1; round <= kTuneRounds; ++round) {
    const double sigma = 0.5 * (lo + hi);
    if (absolute) {
      run.threshold = AbsoluteThreshold{sigma};
    } else {
      TwoStepThreshold t = std::get<TwoStepThreshold>(inner);
      t.sigma_i = sigma;
      run.threshold = t;
    }
    SearchResult result = recursive_parallel_search(pair, run);
    const double coverage = data_coverage(result, pair.size());
    const double gap = std::abs(coverage - target);
    if (gap < best_gap) {
      best_gap = gap;
      best.sigma = sigma;
      best.coverage = coverage;
      best.result = std::move(result);
    }
    best.iterations = round;
    if (gap <= kCoverageTolerance) break;
    if (coverage > target) {
      lo = sigma;
    } else {
      hi = sigma;
    }
  }
  return best;
}

std::vector<WindowResult> ranking(std::vector<WindowResult> windows) {
  std::stable_sort(windows.begin(), windows.end(), [](const WindowResult& a, const WindowResult& b) {
    if (a.mi != b.mi) return a.mi > b.mi;
    return a.s_idx < b.s_idx;
  });
  return windows;
}

}  // namespace amic
