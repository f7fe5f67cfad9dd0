#include "amic/ksg.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "amic/error.hpp"

namespace amic {
namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
constexpr std::int64_t kRecurrenceCutoff = 64;
constexpr std::int64_t kFixedTableSize = std::int64_t{1} << 17;
constexpr int kMaxK = 64;
// Slack for grid-boundary bounds computed in floating point; only ever makes
// the search visit more cells.
constexpr double kBoundSlack = 1e-12;

const std::array<double, kRecurrenceCutoff + 1>& recurrence_table() {
  static const auto table = [] {
    std::array<double, kRecurrenceCutoff + 1> t{};
    t[1] = -kEulerGamma;
    for (std::int64_t n = 1; n < kRecurrenceCutoff; ++n) t[n + 1] = t[n] + 1.0 / static_cast<double>(n);
    return t;
  }();
  return table;
}

std::int64_t to_fixed(double x) { return std::llround(std::ldexp(x, kPsiFractionBits)); }

const std::vector<std::int64_t>& fixed_table() {
  static const auto table = [] {
    std::vector<std::int64_t> t(kFixedTableSize);
    for (std::int64_t n = 1; n < kFixedTableSize; ++n) t[n] = to_fixed(digamma(n));
    return t;
  }();
  return table;
}

struct Candidate {
  double dist;
  std::size_t sample;
  std::uint32_t slot;

  bool operator<(const Candidate& o) const { return dist < o.dist || (dist == o.dist && sample < o.sample); }
};

}  // namespace

double digamma(std::int64_t n) {
  if (n < 1) throw Error("digamma: argument must be >= 1");
  if (n <= kRecurrenceCutoff) return recurrence_table()[n];
  const double x = static_cast<double>(n);
  const double inv2 = 1.0 / (x * x);
  return std::log(x) - 0.5 / x - inv2 / 12.0 + inv2 * inv2 / 120.0;
}

std::int64_t digamma_fixed(std::int64_t n) {
  if (n >= 1 && n < kFixedTableSize) return fixed_table()[n];
  return to_fixed(digamma(n));
}

double max_norm(const Point& p, const Point& q) { return std::max(std::abs(p.u - q.u), std::abs(p.v - q.v)); }

BoxGrid::BoxGrid(std::size_t cells_per_axis) : cells_(std::max<std::size_t>(1, cells_per_axis)) {
  cells_data_.resize(cells_ * cells_);
}

std::size_t BoxGrid::cell_coord(double coord) const {
  if (!(coord > 0.0)) return 0;
  const double scaled = coord * static_cast<double>(cells_);
  return std::min(static_cast<std::size_t>(scaled), cells_ - 1);
}

void BoxGrid::insert(std::uint32_t slot, double u, double v) { cells_data_[cell_index(u, v)].push_back(slot); }

bool BoxGrid::erase(std::uint32_t slot, double u, double v) {
  auto& bucket = cells_data_[cell_index(u, v)];
  const auto it = std::find(bucket.begin(), bucket.end(), slot);
  if (it == bucket.end()) return false;
  *it = bucket.back();
  bucket.pop_back();
  return true;
}

void BoxGrid::clear() {
  for (auto& bucket : cells_data_) bucket.clear();
}

std::size_t cells_for_window(std::size_t window_size) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(window_size)))));
}

NeighborInfo knn_query(const BoxGrid& grid, const CloudView& cloud, std::size_t slot, int k) {
  if (k < 1 || k > kMaxK) throw Error("knn_query: k out of range");
  const double ui = cloud.u[slot];
  const double vi = cloud.v[slot];
  const auto c = static_cast<std::ptrdiff_t>(grid.cells_per_axis());
  const auto cx = static_cast<std::ptrdiff_t>(grid.cell_coord(ui));
  const auto cy = static_cast<std::ptrdiff_t>(grid.cell_coord(vi));
  const double width = 1.0 / static_cast<double>(c);

  std::array<Candidate, kMaxK> best{};
  int found = 0;
  auto consider = [&](std::uint32_t j) {
    if (j == slot) return;
    const Candidate cand{std::max(std::abs(cloud.u[j] - ui), std::abs(cloud.v[j] - vi)), cloud.sample(j), j};
    if (found == k) {
      if (!(cand < best[k - 1])) return;
      --found;
    }
    int pos = found++;
    while (pos > 0 && cand < best[pos - 1]) {
      best[pos] = best[pos - 1];
      --pos;
    }
    best[pos] = cand;
  };
  auto scan_cell = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    if (x < 0 || y < 0 || x >= c || y >= c) return;
    for (const std::uint32_t j : grid.cell(static_cast<std::size_t>(x), static_cast<std::size_t>(y))) consider(j);
  };

  for (std::ptrdiff_t r = 0;; ++r) {
    if (r == 0) {
      scan_cell(cx, cy);
    } else {
      for (std::ptrdiff_t x = cx - r; x <= cx + r; ++x) {
        scan_cell(x, cy - r);
        scan_cell(x, cy + r);
      }
      for (std::ptrdiff_t y = cy - r + 1; y <= cy + r - 1; ++y) {
        scan_cell(cx - r, y);
        scan_cell(cx + r, y);
      }
    }
    // Smallest distance any point outside the (2r+1)^2 block can have.
    double bound = std::numeric_limits<double>::infinity();
    if (cx - r > 0) bound = std::min(bound, ui - static_cast<double>(cx - r) * width);
    if (cx + r + 1 < c) bound = std::min(bound, static_cast<double>(cx + r + 1) * width - ui);
    if (cy - r > 0) bound = std::min(bound, vi - static_cast<double>(cy - r) * width);
    if (cy + r + 1 < c) bound = std::min(bound, static_cast<double>(cy + r + 1) * width - vi);
    if (bound == std::numeric_limits<double>::infinity()) break;
    if (found == k && bound - kBoundSlack > best[k - 1].dist) break;
  }
  if (found < k) throw Error("knn_query: window holds fewer than k+1 points");

  NeighborInfo info;
  info.kth_idx = best[k - 1].sample;
  for (int n = 0; n < k; ++n) {
    info.d_x = std::max(info.d_x, std::abs(cloud.u[best[n].slot] - ui));
    info.d_y = std::max(info.d_y, std::abs(cloud.v[best[n].slot] - vi));
  }
  return info;
}

MarginalCounts marginal_counts(const CloudView& cloud, std::size_t slot, const NeighborInfo& info) {
  MarginalCounts counts;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (j == slot) continue;
    if (std::abs(cloud.u[j] - cloud.u[slot]) <= info.d_x) ++counts.n_x;
    if (std::abs(cloud.v[j] - cloud.v[slot]) <= info.d_y) ++counts.n_y;
  }
  return counts;
}

AxisIndex::AxisIndex(std::span<const double> coord)
    : coord_(coord), order_(coord.size()), pos_(coord.size()), active_(coord.size(), 0), fenwick_(coord.size() + 1, 0) {
  std::iota(order_.begin(), order_.end(), 0u);
  std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
    return coord_[a] < coord_[b] || (coord_[a] == coord_[b] && a < b);
  });
  sorted_.resize(order_.size());
  for (std::size_t p = 0; p < order_.size(); ++p) {
    pos_[order_[p]] = static_cast<std::uint32_t>(p);
    sorted_[p] = coord_[order_[p]];
  }
}

void AxisIndex::activate(std::size_t slot) {
  if (active_[slot]) return;
  active_[slot] = 1;
  for (std::size_t i = pos_[slot] + 1; i < fenwick_.size(); i += i & (~i + 1)) ++fenwick_[i];
}

void AxisIndex::deactivate(std::size_t slot) {
  if (!active_[slot]) return;
  active_[slot] = 0;
  for (std::size_t i = pos_[slot] + 1; i < fenwick_.size(); i += i & (~i + 1)) --fenwick_[i];
}

std::size_t AxisIndex::prefix(std::size_t end) const {
  std::size_t total = 0;
  for (std::size_t i = end; i > 0; i -= i & (~i + 1)) total += fenwick_[i];
  return total;
}

std::size_t AxisIndex::count_within(std::size_t slot, double d) const {
  const double c0 = coord_[slot];
  const std::size_t p = pos_[slot];
  const std::size_t n = sorted_.size();
  auto near = [&](std::size_t q) { return std::abs(sorted_[q] - c0) <= d; };

  // Gallop outwards from p, then bisect; "near" holds on a run around p.
  std::size_t step = 1;
  std::size_t inner = p;  // known near (or p itself)
  while (step <= inner && near(inner - step)) {
    inner -= step;
    step *= 2;
  }
  std::size_t lo = step <= inner ? inner - step + 1 : 0;
  std::size_t hi = inner;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (near(mid)) hi = mid; else lo = mid + 1;
  }
  const std::size_t left = lo;

  step = 1;
  inner = p;
  while (inner + step < n && near(inner + step)) {
    inner += step;
    step *= 2;
  }
  lo = inner + 1;
  hi = std::min(inner + step, n);
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (near(mid)) lo = mid + 1; else hi = mid;
  }
  const std::size_t right = lo;
  return prefix(right) - prefix(left) - 1;
}

MiEstimate mi_from_psi_sum(PsiSum sum, std::size_t n, int k) {
  const long double mean = static_cast<long double>(sum) / std::ldexp(1.0L, kPsiFractionBits) / static_cast<long double>(n);
  MiEstimate mi;
  mi.n = n;
  mi.k = k;
  mi.raw = digamma(k) - 1.0 / k - static_cast<double>(mean) + digamma(static_cast<std::int64_t>(n));
  mi.clamped = std::max(0.0, mi.raw);
  return mi;
}

MiEstimate ksg_mi(const CloudView& cloud, int k) {
  const std::size_t n = cloud.size();
  if (k < 1) throw Error("ksg_mi: k must be positive");
  if (n < static_cast<std::size_t>(k) + 2) throw Error("ksg_mi: need at least k+2 points");

  BoxGrid grid(cells_for_window(n));
  AxisIndex xs(cloud.u);
  AxisIndex ys(cloud.v);
  for (std::size_t i = 0; i < n; ++i) {
    grid.insert(static_cast<std::uint32_t>(i), cloud.u[i], cloud.v[i]);
    xs.activate(i);
    ys.activate(i);
  }

  PsiSum total = 0;
#pragma omp parallel if (n >= 4096)
  {
    PsiSum partial = 0;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const auto slot = static_cast<std::size_t>(i);
      const NeighborInfo info = knn_query(grid, cloud, slot, k);
      const std::size_t nx = xs.count_within(slot, info.d_x);
      const std::size_t ny = ys.count_within(slot, info.d_y);
      assert(nx >= 1 && ny >= 1);
      partial += digamma_fixed(static_cast<std::int64_t>(std::max<std::size_t>(nx, 1))) +
                 digamma_fixed(static_cast<std::int64_t>(std::max<std::size_t>(ny, 1)));
    }
#pragma omp critical(amic_ksg_sum)
    total += partial;
  }
  return mi_from_psi_sum(total, n, k);
}

MiEstimate ksg_mi(std::span<const Point> points, int k) {
  std::vector<double> u(points.size()), v(points.size());
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    u[i] = points[i].u;
    v[i] = points[i].v;
    idx[i] = points[i].idx;
  }
  return ksg_mi(CloudView{u, v, 0, idx}, k);
}

std::size_t entropy_bins(std::size_t n) { return cells_for_window(n); }

std::size_t entropy_bin(double x, std::size_t bins) {
  if (!(x > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(x * static_cast<double>(bins)), bins - 1);
}

double entropy_from_counts(std::span<const std::uint32_t> counts, std::size_t n) {
  if (n == 0) throw Error("entropy_from_counts: empty input");
  const double total = static_cast<double>(n);
  double h = 0.0;
  for (const std::uint32_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

double plugin_entropy(std::span<const double> values, std::size_t bins) {
  if (bins < 1) throw Error("plugin_entropy: bins must be >= 1");
  if (values.empty()) throw Error("plugin_entropy: empty input");
  std::vector<std::uint32_t> counts(bins, 0);
  for (const double x : values) ++counts[entropy_bin(x, bins)];
  return entropy_from_counts(counts, values.size());
}

double window_entropy(const MiEstimate& mi, double hx, double hy, std::size_t n) {
  return std::clamp(hx + hy - mi.clamped, 0.0, std::log(static_cast<double>(n)));
}

double normalized_entropy(double h_w, std::size_t n) {
  return std::clamp(h_w / std::log(static_cast<double>(n)), 0.0, 1.0);
}

double nmi_max(const MiEstimate& mi, std::size_t n) {
  return std::clamp(mi.clamped / std::log(static_cast<double>(n)), 0.0, 1.0);
}

double nmi_entropy(const MiEstimate& mi, double h_w) {
  if (h_w <= 0.0) return 0.0;
  return std::clamp(mi.clamped / h_w, 0.0, 1.0);
}

KTuning tune_k(const RankedPair& pair, int k_min, int k_max) {
  if (k_min < 1 || k_max > 20 || k_min > k_max) throw Error("tune_k: k range must lie within [1, 20]");
  if (pair.size() < static_cast<std::size_t>(k_max) + 2) throw Error("tune_k: series too short for k_max");

  const CloudView cloud{pair.u, pair.v};
  KTuning tuning;
  double mean = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double mi = ksg_mi(cloud, k).raw;
    tuning.profile.emplace_back(k, mi);
    mean += mi;
  }
  mean /= static_cast<double>(tuning.profile.size());

  // First k whose forward spread (max - min over k..k_max) is within 10% of
  // the mean level; the singleton tail always qualifies.
  tuning.k = k_max;
  for (std::size_t i = 0; i < tuning.profile.size(); ++i) {
    double lo = tuning.profile[i].second, hi = lo;
    for (std::size_t j = i; j < tuning.profile.size(); ++j) {
      lo = std::min(lo, tuning.profile[j].second);
      hi = std::max(hi, tuning.profile[j].second);
    }
    if (hi - lo <= 0.1 * std::abs(mean)) {
      tuning.k = tuning.profile[i].first;
      break;
    }
  }
  return tuning;
}

}  // namespace amic
