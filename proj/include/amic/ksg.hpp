#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "amic/series.hpp"

namespace amic {

struct Point {
  std::size_t idx = 0;
  double u = 0.0;
  double v = 0.0;
};

// Read-only view of a point cloud addressed by slot. The sample index of a
// slot is idx[slot] when idx is given, base + slot otherwise; kNN ties are
// broken by sample index.
struct CloudView {
  std::span<const double> u;
  std::span<const double> v;
  std::size_t base = 0;
  std::span<const std::size_t> idx = {};

  std::size_t size() const { return u.size(); }
  std::size_t sample(std::size_t slot) const { return idx.empty() ? base + slot : idx[slot]; }
};

// Sum of digamma values in fixed point (scaled by 2^kPsiFractionBits). Integer
// accumulation makes the sum independent of insertion order, so incremental
// and batch paths agree bit for bit.
__extension__ using PsiSum = __int128;
inline constexpr int kPsiFractionBits = 40;

double digamma(std::int64_t n);
std::int64_t digamma_fixed(std::int64_t n);

double max_norm(const Point& p, const Point& q);

// Uniform c x c spatial hash over [0,1]^2 holding slots.
class BoxGrid {
 public:
  explicit BoxGrid(std::size_t cells_per_axis);

  std::size_t cells_per_axis() const { return cells_; }
  std::size_t cell_coord(double coord) const;
  std::size_t cell_index(double u, double v) const { return cell_coord(v) * cells_ + cell_coord(u); }

  void insert(std::uint32_t slot, double u, double v);
  // Returns false when the slot is not in the cell for (u, v).
  bool erase(std::uint32_t slot, double u, double v);
  void clear();

  std::span<const std::uint32_t> cell(std::size_t cx, std::size_t cy) const { return cells_data_[cy * cells_ + cx]; }

 private:
  std::size_t cells_;
  std::vector<std::vector<std::uint32_t>> cells_data_;
};

std::size_t cells_for_window(std::size_t window_size);

struct NeighborInfo {
  std::size_t kth_idx = 0;  // sample index of the kth nearest neighbour
  double d_x = 0.0;         // per-axis extents of the k-neighbourhood
  double d_y = 0.0;
};

struct MarginalCounts {
  std::size_t n_x = 0;
  std::size_t n_y = 0;
};

struct MiEstimate {
  double raw = 0.0;
  double clamped = 0.0;
  std::size_t n = 0;
  int k = 0;
};

// k nearest neighbours of `slot` under the max norm, found by ring expansion
// over `grid`, which must hold exactly the active slots of `cloud`. Ties are
// ordered by sample index. d_x / d_y are the largest per-axis offsets among
// the k neighbours, so max(d_x, d_y) is the kth max-norm distance.
NeighborInfo knn_query(const BoxGrid& grid, const CloudView& cloud, std::size_t slot, int k);

// Counts by direct scan: n_x = #{j != i : |u_j - u_i| <= d_x}, same for y.
MarginalCounts marginal_counts(const CloudView& cloud, std::size_t slot, const NeighborInfo& info);

// Order statistics along one axis with membership, answering inclusive
// "how many active points within d of slot" queries in O(log n).
class AxisIndex {
 public:
  explicit AxisIndex(std::span<const double> coord);

  void activate(std::size_t slot);
  void deactivate(std::size_t slot);
  bool active(std::size_t slot) const { return active_[slot] != 0; }

  // #{active j != slot : |c_j - c_slot| <= d}; slot must be active.
  std::size_t count_within(std::size_t slot, double d) const;

  std::size_t position(std::size_t slot) const { return pos_[slot]; }
  std::size_t slot_at(std::size_t position) const { return order_[position]; }
  std::size_t size() const { return order_.size(); }

 private:
  std::size_t prefix(std::size_t end) const;  // active count in positions [0, end)

  std::span<const double> coord_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> pos_;
  std::vector<double> sorted_;  // coord_ in position order
  std::vector<std::uint8_t> active_;
  std::vector<std::uint32_t> fenwick_;
};

MiEstimate mi_from_psi_sum(PsiSum sum, std::size_t n, int k);

MiEstimate ksg_mi(const CloudView& cloud, int k);
MiEstimate ksg_mi(std::span<const Point> points, int k);

// Histogram entropy (nats) over [0,1] with equal-width bins.
double plugin_entropy(std::span<const double> values, std::size_t bins);
std::size_t entropy_bins(std::size_t n);
std::size_t entropy_bin(double x, std::size_t bins);
double entropy_from_counts(std::span<const std::uint32_t> counts, std::size_t n);

double window_entropy(const MiEstimate& mi, double hx, double hy, std::size_t n);
double normalized_entropy(double h_w, std::size_t n);
double nmi_max(const MiEstimate& mi, std::size_t n);
double nmi_entropy(const MiEstimate& mi, double h_w);

struct KTuning {
  int k = 0;
  std::vector<std::pair<int, double>> profile;  // (k, raw MI over the whole pair)
};

KTuning tune_k(const RankedPair& pair, int k_min, int k_max);

}  // namespace amic
