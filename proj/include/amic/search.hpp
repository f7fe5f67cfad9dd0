#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "amic/association.hpp"
#include "amic/ksg.hpp"
#include "amic/series.hpp"
#include "amic/window.hpp"

namespace amic {

struct AbsoluteThreshold {
  double sigma = 0.0;
};

enum class NmiNorm { max_entropy, window_entropy };

struct TwoStepThreshold {
  double sigma_h = 0.2;
  double sigma_i = 0.2;
  NmiNorm norm = NmiNorm::window_entropy;
};

using InnerThreshold = std::variant<AbsoluteThreshold, TwoStepThreshold>;

// Tuned by tune_sigma_for_coverage; when evaluated directly the inner
// strategy is used as is.
struct CoverageThreshold {
  double target = 0.5;
  InnerThreshold inner = AbsoluteThreshold{};
};

using ThresholdStrategy = std::variant<AbsoluteThreshold, TwoStepThreshold, CoverageThreshold>;

void validate(const ThresholdStrategy& strategy);

struct WindowStats {
  double mi = 0.0;      // clamped
  double h_w = 0.0;     // joint entropy estimate
  double h_norm = 0.0;  // h_w / ln n
  double nmi1 = 0.0;    // mi / ln n
  double nmi2 = 0.0;    // mi / h_w
};

WindowStats window_stats(const MiEstimate& mi, double hx, double hy, std::size_t n);

bool evaluate_threshold(const ThresholdStrategy& strategy, const WindowStats& stats);

struct WindowResult {
  std::size_t s_idx = 0;
  std::size_t e_idx = 0;  // exclusive
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;  // timestamp of the last sample
  std::size_t granularity = 0;
  double mi_raw = 0.0;
  double mi = 0.0;
  double h_w = 0.0;
  double h_norm = 0.0;
  double nmi1 = 0.0;
  double nmi2 = 0.0;
  double mu = 0.0;
  Sign sign = Sign::neither;
  double confidence = 0.0;

  IndexRange span() const { return {s_idx, e_idx}; }
};

struct SearchResult {
  std::vector<WindowResult> windows;
  std::vector<IndexRange> leftout;
  std::vector<std::size_t> layers_run;
};

struct SearchConfig {
  int k = 6;
  std::vector<std::size_t> ladder;  // empty: halving_ladder(N, min_window_size())
  double slide_frac = 0.125;
  ThresholdStrategy threshold = TwoStepThreshold{};
  std::size_t min_window = 24;
  std::size_t partitions = 1;
  std::size_t workers = 1;

  std::size_t min_window_size() const;
};

// N/4, N/8, ... while >= n_min, then n_min itself.
std::vector<std::size_t> halving_ladder(std::size_t n, std::size_t n_min);
std::vector<std::size_t> resolve_ladder(const SearchConfig& config, std::size_t n);
std::size_t slide_for(std::size_t g, double slide_frac);

// One evaluated candidate: window [pos, pos + g).
struct ScanStep {
  std::size_t pos = 0;
  bool passed = false;

  friend bool operator==(const ScanStep&, const ScanStep&) = default;
};

struct LayerScan {
  std::vector<IndexRange> windows;
  std::vector<IndexRange> leftout;
  std::vector<ScanStep> trace;
};

// Evaluates fixed-size candidate windows inside a universe, incrementally
// when consecutive candidates overlap. Marginal histograms for the entropy
// terms are kept alongside the KSG state.
class WindowScanner {
 public:
  WindowScanner(const RankedPair& pair, IndexRange universe, std::size_t g, int k);

  bool evaluate(std::size_t pos, const ThresholdStrategy& strategy);
  const WindowState& state() const { return window_.state(); }

 private:
  void move_histograms(IndexRange next);
  void bump(std::size_t i, int delta);

  const RankedPair& pair_;
  std::size_t g_;
  std::size_t bins_;
  SlidingWindow window_;
  IndexRange hist_range_{};
  std::vector<std::uint32_t> hx_;
  std::vector<std::uint32_t> hy_;
};

// Batch evaluation of one candidate; agrees bit for bit with WindowScanner.
bool evaluate_window(const RankedPair& pair, IndexRange window, int k, const ThresholdStrategy& strategy);

// Slides windows of size g over segment starting at its left edge. A passing
// window is kept and the scan resumes at its end; a failing one shifts by
// slide. Leftout is the segment minus the kept windows.
LayerScan scan_layer(const RankedPair& pair, IndexRange segment, std::size_t g, std::size_t slide,
                     const ThresholdStrategy& strategy, int k);

// Appends segment minus the sorted, disjoint windows to leftout.
void split_segment(IndexRange segment, std::span<const IndexRange> windows, std::vector<IndexRange>& leftout);

WindowResult describe_window(const RankedPair& pair, IndexRange span, std::size_t granularity, int k);

// Serial reference: layers over the ladder, leftout of one layer feeding the
// next, windows merged at the end.
SearchResult layered_search(const RankedPair& pair, const SearchConfig& config);

double data_coverage(const SearchResult& result, std::size_t n);
double data_coverage(std::size_t selected, std::size_t n);

struct CoverageTuning {
  double sigma = 0.0;
  double coverage = 0.0;
  int iterations = 0;
  SearchResult result;
};

// Bisection on sigma (Absolute) or sigma_i (TwoStep, sigma_h fixed) until
// coverage is within 0.05 of target or 20 rounds pass. Uses the parallel
// search with the config's partitions and workers.
CoverageTuning tune_sigma_for_coverage(const RankedPair& pair, const SearchConfig& config, double target);

// By mi descending, earlier start first on ties.
std::vector<WindowResult> ranking(std::vector<WindowResult> windows);

}  // namespace amic
