#include "amic/window.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "amic/error.hpp"

namespace amic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStabSlack = 1e-12;
constexpr std::uint8_t kInX = 1;
constexpr std::uint8_t kInY = 2;
// Relative cost of a band-only count update (stab + adjust) against a full
// kNN search with marginal counts, and the prior cost of one change.
constexpr double kCountUpdateWeight = 0.1;
constexpr double kPriorChangeCost = 8.0;
// Chunk length of a SlidingWindow, in window lengths.
constexpr std::size_t kChunkWindows = 2;

CloudView universe_view(const RankedPair& pair, IndexRange universe) {
  if (universe.end > pair.size() || universe.empty()) throw Error("window universe outside the series");
  return CloudView{std::span<const double>(pair.u).subspan(universe.begin, universe.size()),
                   std::span<const double>(pair.v).subspan(universe.begin, universe.size()), universe.begin};
}

}  // namespace

WindowState::BandTree::BandTree(std::size_t n)
    : blocks_(std::bit_ceil(std::max<std::size_t>((n + kBlock - 1) / kBlock, 1))),
      hi_(blocks_ * kBlock, -kInf),
      lo_(blocks_ * kBlock, kInf),
      node_hi_(2 * blocks_, -kInf),
      node_lo_(2 * blocks_, kInf) {}

void WindowState::BandTree::set(std::size_t position, double hi, double lo) {
  hi_[position] = hi;
  lo_[position] = lo;
  const std::size_t block = position / kBlock;
  const std::size_t first = block * kBlock;
  double bh = -kInf, bl = kInf;
  for (std::size_t p = first; p < first + kBlock; ++p) {
    bh = std::max(bh, hi_[p]);
    bl = std::min(bl, lo_[p]);
  }
  std::size_t i = blocks_ + block;
  node_hi_[i] = bh;
  node_lo_[i] = bl;
  for (i >>= 1; i >= 1; i >>= 1) {
    node_hi_[i] = std::max(node_hi_[2 * i], node_hi_[2 * i + 1]);
    node_lo_[i] = std::min(node_lo_[2 * i], node_lo_[2 * i + 1]);
  }
}

void WindowState::BandTree::clear(std::size_t position) { set(position, -kInf, kInf); }

void WindowState::BandTree::stab(std::size_t split, double q, std::vector<std::uint32_t>& out) const {
  const double q_hi = q - kStabSlack;
  const double q_lo = q + kStabSlack;
  // Node stack: (node, first block, block count).
  std::array<std::size_t, 3 * 64> stack;
  std::size_t top = 0;

  // Left of split: hi >= q.
  stack[top++] = 1;
  stack[top++] = 0;
  stack[top++] = blocks_;
  while (top > 0) {
    const std::size_t width = stack[--top];
    const std::size_t first = stack[--top];
    const std::size_t node = stack[--top];
    if (first * kBlock >= split || node_hi_[node] < q_hi) continue;
    if (width == 1) {
      const std::size_t end = std::min(split, (first + 1) * kBlock);
      for (std::size_t p = first * kBlock; p < end; ++p) {
        if (hi_[p] >= q_hi) out.push_back(static_cast<std::uint32_t>(p));
      }
      continue;
    }
    const std::size_t half = width / 2;
    stack[top++] = 2 * node + 1;
    stack[top++] = first + half;
    stack[top++] = half;
    stack[top++] = 2 * node;
    stack[top++] = first;
    stack[top++] = half;
  }

  // Right of split: lo <= q.
  stack[top++] = 1;
  stack[top++] = 0;
  stack[top++] = blocks_;
  while (top > 0) {
    const std::size_t width = stack[--top];
    const std::size_t first = stack[--top];
    const std::size_t node = stack[--top];
    if ((first + width) * kBlock <= split + 1 || node_lo_[node] > q_lo) continue;
    if (width == 1) {
      for (std::size_t p = std::max(split + 1, first * kBlock); p < (first + 1) * kBlock; ++p) {
        if (lo_[p] <= q_lo) out.push_back(static_cast<std::uint32_t>(p));
      }
      continue;
    }
    const std::size_t half = width / 2;
    stack[top++] = 2 * node + 1;
    stack[top++] = first + half;
    stack[top++] = half;
    stack[top++] = 2 * node;
    stack[top++] = first;
    stack[top++] = half;
  }
}

WindowState::WindowState(const CloudView& universe, int k, std::size_t cells_per_axis)
    : cloud_(universe),
      k_(k),
      grid_(cells_per_axis),
      xs_(universe.u),
      ys_(universe.v),
      x_bands_(universe.size()),
      y_bands_(universe.size()),
      records_(universe.size()),
      contrib_(universe.size(), 0),
      member_(universe.size(), 0),
      affected_flags_(universe.size(), 0),
      stamp_(universe.size(), 0) {
  if (k < 1) throw Error("window: k must be positive");
  if (!universe.idx.empty()) throw Error("window: universe must be a contiguous sample range");
}

WindowState WindowState::init_window(const RankedPair& pair, IndexRange universe, IndexRange range, int k,
                                     std::size_t cells_per_axis) {
  WindowState state(universe_view(pair, universe), k, cells_per_axis);
  state.slide_to(range);
  return state;
}

WindowState WindowState::init_window(const RankedPair& pair, IndexRange range, int k) {
  return init_window(pair, range, range, k, cells_for_window(range.size()));
}

std::size_t WindowState::slot_of(std::size_t i) const {
  if (i < cloud_.base || i >= cloud_.base + cloud_.size()) {
    throw Error("window: sample " + std::to_string(i) + " outside the window universe");
  }
  return i - cloud_.base;
}

bool WindowState::contains(std::size_t i) const {
  return i >= cloud_.base && i < cloud_.base + cloud_.size() && member_[i - cloud_.base] != 0;
}

void WindowState::insert_membership(std::size_t slot) {
  if (members_ == 0) {
    span_lo_ = slot;
    span_hi_ = slot + 1;
  } else {
    span_lo_ = std::min(span_lo_, slot);
    span_hi_ = std::max(span_hi_, slot + 1);
  }
  member_[slot] = 1;
  ++members_;
  grid_.insert(static_cast<std::uint32_t>(slot), cloud_.u[slot], cloud_.v[slot]);
  xs_.activate(slot);
  ys_.activate(slot);
}

void WindowState::erase_membership(std::size_t slot) {
  member_[slot] = 0;
  --members_;
  grid_.erase(static_cast<std::uint32_t>(slot), cloud_.u[slot], cloud_.v[slot]);
  xs_.deactivate(slot);
  ys_.deactivate(slot);
}

void WindowState::drop_record(std::size_t slot) {
  PointRecord& rec = records_[slot];
  if (!rec.valid) return;
  sum_ -= contrib_[slot];
  contrib_[slot] = 0;
  rec.valid = false;
  x_bands_.clear(xs_.position(slot));
  y_bands_.clear(ys_.position(slot));
}

void WindowState::compute_record(std::size_t slot) {
  PointRecord& rec = records_[slot];
  if (rec.valid) sum_ -= contrib_[slot];
  const NeighborInfo info = knn_query(grid_, cloud_, slot, k_);
  rec.kth_idx = info.kth_idx;
  rec.d_x = info.d_x;
  rec.d_y = info.d_y;
  rec.n_x = static_cast<std::uint32_t>(xs_.count_within(slot, info.d_x));
  rec.n_y = static_cast<std::uint32_t>(ys_.count_within(slot, info.d_y));
  rec.valid = true;
  contrib_[slot] = digamma_fixed(std::max<std::int64_t>(rec.n_x, 1)) + digamma_fixed(std::max<std::int64_t>(rec.n_y, 1));
  sum_ += contrib_[slot];
  const double u = cloud_.u[slot];
  const double v = cloud_.v[slot];
  x_bands_.set(xs_.position(slot), u + rec.d_x, u - rec.d_x);
  y_bands_.set(ys_.position(slot), v + rec.d_y, v - rec.d_y);
}

void WindowState::adjust_count(std::size_t slot, int dx, int dy) {
  PointRecord& rec = records_[slot];
  rec.n_x = static_cast<std::uint32_t>(static_cast<int>(rec.n_x) + dx);
  rec.n_y = static_cast<std::uint32_t>(static_cast<int>(rec.n_y) + dy);
  sum_ -= contrib_[slot];
  contrib_[slot] = digamma_fixed(std::max<std::int64_t>(rec.n_x, 1)) + digamma_fixed(std::max<std::int64_t>(rec.n_y, 1));
  sum_ += contrib_[slot];
}

void WindowState::collect_affected(std::size_t slot) {
  affected_.clear();
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0u);
    epoch_ = 1;
  }
  const double up = cloud_.u[slot];
  const double vp = cloud_.v[slot];

  auto visit = [&](std::size_t j, std::uint8_t flag) {
    if (j == slot || !member_[j] || !records_[j].valid) return;
    if (stamp_[j] != epoch_) {
      stamp_[j] = epoch_;
      affected_flags_[j] = 0;
      affected_.push_back(static_cast<std::uint32_t>(j));
    }
    affected_flags_[j] |= flag;
  };

  positions_.clear();
  x_bands_.stab(xs_.position(slot), up, positions_);
  for (const std::uint32_t p : positions_) {
    const std::size_t j = xs_.slot_at(p);
    if (std::abs(cloud_.u[j] - up) <= records_[j].d_x) visit(j, kInX);
  }
  positions_.clear();
  y_bands_.stab(ys_.position(slot), vp, positions_);
  for (const std::uint32_t p : positions_) {
    const std::size_t j = ys_.slot_at(p);
    if (std::abs(cloud_.v[j] - vp) <= records_[j].d_y) visit(j, kInY);
  }
}

void WindowState::add_point(std::size_t i) {
  const std::size_t slot = slot_of(i);
  if (member_[slot]) throw Error("window: sample " + std::to_string(i) + " already present");
  stats_ = {};
  insert_membership(slot);
  if (dirty_ || !enough_points()) {
    dirty_ = true;
    return;
  }

  collect_affected(slot);
  const double up = cloud_.u[slot];
  const double vp = cloud_.v[slot];
  const std::size_t sample = cloud_.sample(slot);
  for (const std::uint32_t j : affected_) {
    const PointRecord& rec = records_[j];
    const double radius = std::max(rec.d_x, rec.d_y);
    const double dist = std::max(std::abs(cloud_.u[j] - up), std::abs(cloud_.v[j] - vp));
    if (dist < radius || (dist == radius && sample < rec.kth_idx)) {
      // The new point displaces the kth neighbour.
      compute_record(j);
      ++stats_.searches;
    } else {
      const std::uint8_t f = affected_flags_[j];
      adjust_count(j, (f & kInX) ? 1 : 0, (f & kInY) ? 1 : 0);
      ++stats_.count_updates;
    }
  }
  compute_record(slot);
  ++stats_.searches;
  totals_.searches += stats_.searches;
  totals_.count_updates += stats_.count_updates;
}

void WindowState::remove_point(std::size_t i) {
  const std::size_t slot = slot_of(i);
  if (!member_[slot]) throw Error("window: sample " + std::to_string(i) + " not present");
  stats_ = {};
  drop_record(slot);
  erase_membership(slot);
  if (members_ == 0) {
    dirty_ = false;
    return;
  }
  if (dirty_ || !enough_points()) {
    dirty_ = true;
    return;
  }

  collect_affected(slot);
  const double uq = cloud_.u[slot];
  const double vq = cloud_.v[slot];
  const std::size_t sample = cloud_.sample(slot);
  for (const std::uint32_t j : affected_) {
    const PointRecord& rec = records_[j];
    const double radius = std::max(rec.d_x, rec.d_y);
    const double dist = std::max(std::abs(cloud_.u[j] - uq), std::abs(cloud_.v[j] - vq));
    if (dist < radius || (dist == radius && sample <= rec.kth_idx)) {
      // The removed point was one of j's k neighbours.
      compute_record(j);
      ++stats_.searches;
    } else {
      const std::uint8_t f = affected_flags_[j];
      adjust_count(j, (f & kInX) ? -1 : 0, (f & kInY) ? -1 : 0);
      ++stats_.count_updates;
    }
  }
  totals_.searches += stats_.searches;
  totals_.count_updates += stats_.count_updates;
}

void WindowState::rebuild() {
  for (std::size_t s = span_lo_; s < span_hi_; ++s) {
    if (records_[s].valid) drop_record(s);
  }
  sum_ = 0;
  dirty_ = false;
  if (members_ == 0) return;
  if (!enough_points()) {
    dirty_ = true;
    return;
  }
  for (std::size_t s = span_lo_; s < span_hi_; ++s) {
    if (member_[s]) compute_record(s);
  }
  totals_.searches += members_;
}

void WindowState::settle() {
  if (dirty_ && enough_points()) rebuild();
}

MiEstimate WindowState::slide_to(IndexRange next) {
  const IndexRange uni = universe();
  if (next.begin < uni.begin || next.end > uni.end || next.empty()) throw Error("slide_to: range outside universe");
  if (next.size() < static_cast<std::size_t>(k_) + 2) throw Error("slide_to: window smaller than k+2");

  const IndexRange prev = range_;
  if (next == prev && !dirty_ && members_ == next.size()) return mi();

  const IndexRange overlap{std::max(prev.begin, next.begin), std::min(prev.end, next.end)};
  const std::size_t kept = overlap.size();
  const std::size_t changes = (prev.size() - kept) + (next.size() - kept);
  const bool incremental = members_ == prev.size() && !dirty_ && kept >= static_cast<std::size_t>(k_) + 1 &&
                           changes < next.size() && prefer_incremental(changes, next.size());

  if (incremental) {
    const UpdateStats before = totals_;
    for (std::size_t i = prev.begin; i < std::min(prev.end, next.begin); ++i) remove_point(i);
    for (std::size_t i = std::max(prev.begin, next.end); i < prev.end; ++i) remove_point(i);
    for (std::size_t i = next.begin; i < std::min(next.end, prev.begin); ++i) add_point(i);
    for (std::size_t i = std::max(next.begin, prev.end); i < next.end; ++i) add_point(i);
    incremental_work_ += static_cast<double>(totals_.searches - before.searches) +
                         kCountUpdateWeight * static_cast<double>(totals_.count_updates - before.count_updates);
    incremental_changes_ += changes;
  } else {
    // Full turnover: membership only, then recompute every record.
    if (members_ > 0) {
      for (std::size_t s = span_lo_; s < span_hi_; ++s) {
        if (records_[s].valid) drop_record(s);
        if (member_[s] && !next.contains(cloud_.base + s)) erase_membership(s);
      }
    }
    for (std::size_t i = next.begin; i < next.end; ++i) {
      if (!member_[i - cloud_.base]) insert_membership(i - cloud_.base);
    }
    if (members_ == next.size()) {
      span_lo_ = next.begin - cloud_.base;
      span_hi_ = next.end - cloud_.base;
    }
    dirty_ = true;
  }
  range_ = next;
  settle();
  return mi();
}

bool WindowState::prefer_incremental(std::size_t changes, std::size_t next_size) const {
  switch (policy_) {
    case SlidePolicy::incremental: return true;
    case SlidePolicy::rebuild: return false;
    case SlidePolicy::adaptive: break;
  }
  const double per_change = incremental_changes_ == 0
                                ? kPriorChangeCost
                                : incremental_work_ / static_cast<double>(incremental_changes_);
  return static_cast<double>(changes) * per_change < static_cast<double>(next_size);
}

MiEstimate WindowState::mi() const {
  if (dirty_ || members_ < static_cast<std::size_t>(k_) + 2) throw Error("window: MI needs at least k+2 settled points");
  return mi_from_psi_sum(sum_, members_, k_);
}

InfluencedRegion WindowState::influenced_region(std::size_t i) const {
  const std::size_t slot = slot_of(i);
  const PointRecord& rec = records_[slot];
  if (!member_[slot] || !rec.valid || dirty_) throw Error("influenced_region: no valid record");
  const double u = cloud_.u[slot];
  const double v = cloud_.v[slot];
  return {std::max(0.0, u - rec.d_x), std::min(1.0, u + rec.d_x), std::max(0.0, v - rec.d_y), std::min(1.0, v + rec.d_y)};
}

InfluencedMarginalRegion WindowState::influenced_marginal_region(std::size_t i) const {
  const std::size_t slot = slot_of(i);
  const PointRecord& rec = records_[slot];
  if (!member_[slot] || !rec.valid || dirty_) throw Error("influenced_marginal_region: no valid record");
  const double u = cloud_.u[slot];
  const double v = cloud_.v[slot];
  return {{u - rec.d_x, u + rec.d_x}, {v - rec.d_y, v + rec.d_y}};
}

SlidingWindow::SlidingWindow(const RankedPair& pair, IndexRange domain, std::size_t g, int k, SlidePolicy policy)
    : pair_(pair),
      domain_(domain),
      g_(g),
      k_(k),
      policy_(policy),
      state_(universe_view(pair, {domain.begin, std::min(domain.end, domain.begin + kChunkWindows * g)}), k,
             cells_for_window(g)) {
  if (g < static_cast<std::size_t>(k) + 2) throw Error("sliding window: size smaller than k+2");
  if (domain.size() < g) throw Error("sliding window: domain shorter than the window");
  state_.set_policy(policy_);
  chunks_ = 1;
}

MiEstimate SlidingWindow::move_to(std::size_t pos) {
  if (pos < domain_.begin || pos + g_ > domain_.end) throw Error("sliding window: position outside the domain");
  const IndexRange next{pos, pos + g_};
  const IndexRange uni = state_.universe();
  if (next.begin < uni.begin || next.end > uni.end) {
    const IndexRange chunk{pos, std::min(domain_.end, pos + kChunkWindows * g_)};
    state_ = WindowState(universe_view(pair_, chunk), k_, cells_for_window(g_));
    state_.set_policy(policy_);
    ++chunks_;
  }
  return state_.slide_to(next);
}

}  // namespace amic
