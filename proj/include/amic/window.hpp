#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "amic/ksg.hpp"

namespace amic {

// Half-open interval [begin, end) of sample indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
  friend auto operator<=>(const IndexRange&, const IndexRange&) = default;
};

struct PointRecord {
  std::size_t kth_idx = 0;
  double d_x = 0.0;
  double d_y = 0.0;
  std::uint32_t n_x = 0;
  std::uint32_t n_y = 0;
  bool valid = false;

  friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

// (u ± d_x) x (v ± d_y), clipped to the unit square.
struct InfluencedRegion {
  double l = 0.0;
  double r = 0.0;
  double b = 0.0;
  double t = 0.0;
};

struct InfluencedMarginalRegion {
  std::pair<double, double> x_band;
  std::pair<double, double> y_band;
};

// Work done by the last add/remove, for inspection in tests and benchmarks.
struct UpdateStats {
  std::size_t searches = 0;       // full kNN + count recomputations
  std::size_t count_updates = 0;  // band-only increments/decrements
};

// How slide_to moves between overlapping ranges. Results are identical under
// every policy; only the work differs.
enum class SlidePolicy {
  adaptive,     // incremental when the observed cost per change says it pays off
  incremental,  // always incremental while enough points are kept
  rebuild,      // always recompute every record
};

// KSG state of a sliding window over a contiguous universe of samples
// [universe.begin, universe.end) of a point cloud. Points can be added and
// removed one at a time; every record is kept equal to what a from-scratch
// computation over the current members would give.
//
// An inserted or removed point p can only affect a member j if p falls in one
// of j's marginal bands, because the kNN square of j is contained in the band
// of the axis realising max(d_x, d_y). Bands are found with two stabbing
// trees per axis over the sorted coordinates.
class WindowState {
 public:
  WindowState(const CloudView& universe, int k, std::size_t cells_per_axis);

  // Universe is pair samples [universe.begin, universe.end).
  static WindowState init_window(const RankedPair& pair, IndexRange universe, IndexRange range, int k,
                                 std::size_t cells_per_axis);
  static WindowState init_window(const RankedPair& pair, IndexRange range, int k);

  void add_point(std::size_t i);
  void remove_point(std::size_t i);

  // Moves the window to new_range (removals first, then additions) and
  // returns the MI of the new members. Falls back to a rebuild when the
  // overlap is too small for incremental work to pay off.
  MiEstimate slide_to(IndexRange new_range);

  void set_policy(SlidePolicy policy) { policy_ = policy; }
  SlidePolicy policy() const { return policy_; }

  // Rebuilds all records of the current members from scratch.
  void rebuild();
  // Recomputes any records left invalid while the window was too small.
  void settle();

  MiEstimate mi() const;
  PsiSum psi_sum() const { return sum_; }

  bool contains(std::size_t i) const;
  std::size_t size() const { return members_; }
  IndexRange range() const { return range_; }
  IndexRange universe() const { return {cloud_.base, cloud_.base + cloud_.size()}; }
  int k() const { return k_; }

  const PointRecord& record(std::size_t i) const { return records_[slot_of(i)]; }
  InfluencedRegion influenced_region(std::size_t i) const;
  InfluencedMarginalRegion influenced_marginal_region(std::size_t i) const;

  const UpdateStats& last_update() const { return stats_; }
  const UpdateStats& total_updates() const { return totals_; }

 private:
  // Max/min trees over sorted positions of one axis, holding c_j + d_j and
  // c_j - d_j for members with valid records. Leaves are blocks of kBlock
  // positions scanned linearly.
  class BandTree {
   public:
    explicit BandTree(std::size_t n);
    void set(std::size_t position, double hi, double lo);
    void clear(std::size_t position);
    // Appends positions in [0, split) with hi >= q and in (split, n) with
    // lo <= q (both with slack; callers verify exactly).
    void stab(std::size_t split, double q, std::vector<std::uint32_t>& out) const;

   private:
    static constexpr std::size_t kBlock = 16;

    std::size_t blocks_;
    std::vector<double> hi_;
    std::vector<double> lo_;
    std::vector<double> node_hi_;
    std::vector<double> node_lo_;
  };

  std::size_t slot_of(std::size_t i) const;
  bool enough_points() const { return members_ >= static_cast<std::size_t>(k_) + 1; }
  bool prefer_incremental(std::size_t changes, std::size_t next_size) const;

  void insert_membership(std::size_t slot);
  void erase_membership(std::size_t slot);
  void compute_record(std::size_t slot);
  void drop_record(std::size_t slot);
  void adjust_count(std::size_t slot, int dx, int dy);
  void collect_affected(std::size_t slot);

  CloudView cloud_;
  int k_;
  BoxGrid grid_;
  AxisIndex xs_;
  AxisIndex ys_;
  BandTree x_bands_;
  BandTree y_bands_;
  std::vector<PointRecord> records_;
  std::vector<std::int64_t> contrib_;
  std::vector<std::uint8_t> member_;
  std::size_t members_ = 0;
  // Slot interval known to contain every member (may be loose).
  std::size_t span_lo_ = 0;
  std::size_t span_hi_ = 0;
  PsiSum sum_ = 0;
  bool dirty_ = false;
  IndexRange range_{};

  // Scratch for affected-set discovery.
  std::vector<std::uint32_t> positions_;
  std::vector<std::uint32_t> affected_;
  std::vector<std::uint8_t> affected_flags_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;

  UpdateStats stats_;
  UpdateStats totals_;

  SlidePolicy policy_ = SlidePolicy::adaptive;
  // Work observed on incremental slides, in kNN-search units.
  double incremental_work_ = 0.0;
  std::size_t incremental_changes_ = 0;
};

// Fixed-size window moved along a long domain. The underlying WindowState
// covers a chunk of a few window lengths and is re-created when the window
// leaves it, which keeps its sorted indexes dense.
class SlidingWindow {
 public:
  SlidingWindow(const RankedPair& pair, IndexRange domain, std::size_t g, int k,
                SlidePolicy policy = SlidePolicy::adaptive);

  // MI of [pos, pos + g).
  MiEstimate move_to(std::size_t pos);
  const WindowState& state() const { return state_; }
  std::size_t chunks() const { return chunks_; }

 private:
  const RankedPair& pair_;
  IndexRange domain_;
  std::size_t g_;
  int k_;
  SlidePolicy policy_;
  WindowState state_;
  std::size_t chunks_ = 0;
};

}  // namespace amic
