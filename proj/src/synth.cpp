#include "amic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "amic/error.hpp"

namespace amic {
namespace {

constexpr double kRadius = 0.4;
constexpr double kExpSlope = 3.0;
constexpr double kSineFrequency = 4.0 * std::numbers::pi;
constexpr double kOutlierFraction = 0.10;

struct NamedKind {
  RelationKind kind;
  std::string_view name;
};

constexpr NamedKind kNames[] = {
    {RelationKind::independent, "independent"},
    {RelationKind::independent_outliers, "independent_outliers"},
    {RelationKind::linear, "linear"},
    {RelationKind::linear_outliers, "linear_outliers"},
    {RelationKind::exponential, "exponential"},
    {RelationKind::quadratic, "quadratic"},
    {RelationKind::diamond, "diamond"},
    {RelationKind::circle, "circle"},
    {RelationKind::sine, "sine"},
    {RelationKind::cross, "cross"},
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Noise {
 public:
  Noise(std::mt19937_64& rng, double sd) : rng_(rng), sd_(sd), dist_(0.0, sd > 0.0 ? sd : 1.0) {}
  double operator()() { return sd_ > 0.0 ? dist_(rng_) : 0.0; }

 private:
  std::mt19937_64& rng_;
  double sd_;
  std::normal_distribution<double> dist_;
};

std::vector<std::size_t> pick_outliers(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(std::floor(kOutlierFraction * static_cast<double>(n))));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::string_view to_string(RelationKind kind) {
  for (const auto& entry : kNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

RelationKind parse_relation(std::string_view name) {
  for (const auto& entry : kNames) {
    if (entry.name == name) return entry.kind;
  }
  throw Error("unknown relation: " + std::string(name));
}

const std::vector<RelationKind>& all_relations() {
  static const std::vector<RelationKind> kinds = [] {
    std::vector<RelationKind> out;
    for (const auto& entry : kNames) out.push_back(entry.kind);
    return out;
  }();
  return kinds;
}

SeriesPair gen_relation(RelationKind kind, std::size_t n, double noise, std::uint64_t seed) {
  if (n < 10) throw Error("gen_relation: need at least 10 samples");
  if (!(noise >= 0.0)) throw Error("gen_relation: noise must be non-negative");

  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Noise eps(rng, noise);

  SeriesPair pair;
  pair.timestamps.resize(n);
  pair.x.resize(n);
  pair.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) pair.timestamps[i] = kSynthEpoch + static_cast<Timestamp>(i) * kSynthStep;

  auto& x = pair.x;
  auto& y = pair.y;
  switch (kind) {
    case RelationKind::independent:
    case RelationKind::independent_outliers:
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = unit(rng);
        y[i] = unit(rng);
      }
      if (kind == RelationKind::independent_outliers) {
        for (const std::size_t i : pick_outliers(rng, n)) y[i] = x[i] + eps();
      }
      break;
    case RelationKind::linear:
    case RelationKind::linear_outliers:
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = unit(rng);
        y[i] = x[i] + eps();
      }
      if (kind == RelationKind::linear_outliers) {
        for (const std::size_t i : pick_outliers(rng, n)) y[i] = unit(rng);
      }
      break;
    case RelationKind::exponential:
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = unit(rng);
        y[i] = std::expm1(kExpSlope * x[i]) / std::expm1(kExpSlope) + eps();
      }
      break;
    case RelationKind::quadratic:
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = unit(rng);
        y[i] = 4.0 * (x[i] - 0.5) * (x[i] - 0.5) + eps();
      }
      break;
    case RelationKind::diamond: {
      // Corners of |x - 0.5| + |y - 0.5| = kRadius, walked by perimeter.
      const double corners[5][2] = {{0.5 + kRadius, 0.5}, {0.5, 0.5 + kRadius}, {0.5 - kRadius, 0.5},
                                    {0.5, 0.5 - kRadius}, {0.5 + kRadius, 0.5}};
      for (std::size_t i = 0; i < n; ++i) {
        const double s = 4.0 * unit(rng);
        const auto side = std::min<std::size_t>(static_cast<std::size_t>(s), 3);
        const double f = s - static_cast<double>(side);
        x[i] = corners[side][0] * (1.0 - f) + corners[side + 1][0] * f + eps();
        y[i] = corners[side][1] * (1.0 - f) + corners[side + 1][1] * f + eps();
      }
      break;
    }
    case RelationKind::circle:
      for (std::size_t i = 0; i < n; ++i) {
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        x[i] = 0.5 + kRadius * std::cos(theta) + eps();
        y[i] = 0.5 + kRadius * std::sin(theta) + eps();
      }
      break;
    case RelationKind::sine:
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = unit(rng);
        y[i] = 0.5 + kRadius * std::sin(kSineFrequency * x[i]) + eps();
      }
      break;
    case RelationKind::cross:
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = unit(rng);
        const bool rising = unit(rng) < 0.5;
        y[i] = (rising ? x[i] : 1.0 - x[i]) + eps();
      }
      break;
  }
  return pair;
}

Composition compose(const std::vector<RelationKind>& relations, std::size_t n_each, std::size_t gap,
                    std::uint64_t seed, double noise) {
  if (relations.empty()) throw Error("compose: no relations given");
  Composition out;
  std::uint64_t part = 0;
  auto append = [&](const SeriesPair& piece) {
    out.pair.x.insert(out.pair.x.end(), piece.x.begin(), piece.x.end());
    out.pair.y.insert(out.pair.y.end(), piece.y.begin(), piece.y.end());
  };
  for (std::size_t r = 0; r < relations.size(); ++r) {
    if (r > 0 && gap > 0) {
      if (gap < 10) {
        // gen_relation needs 10 samples; draw a longer block and keep the head.
        SeriesPair piece = gen_relation(RelationKind::independent, 10, noise, splitmix64(seed ^ ++part));
        piece.x.resize(gap);
        piece.y.resize(gap);
        append(piece);
      } else {
        append(gen_relation(RelationKind::independent, gap, noise, splitmix64(seed ^ ++part)));
      }
    }
    const std::size_t start = out.pair.x.size();
    append(gen_relation(relations[r], n_each, noise, splitmix64(seed ^ ++part)));
    out.spans.push_back({relations[r], start, out.pair.x.size()});
  }
  out.pair.timestamps.resize(out.pair.x.size());
  for (std::size_t i = 0; i < out.pair.timestamps.size(); ++i) {
    out.pair.timestamps[i] = kSynthEpoch + static_cast<Timestamp>(i) * kSynthStep;
  }
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("pearson: need two equal-length series of >= 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson(const SeriesPair& pair) { return pearson(pair.x, pair.y); }

double dcor(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("dcor: need two equal-length series of >= 2 samples");
  const std::size_t n = x.size();
  const auto sn = static_cast<std::ptrdiff_t>(n);
  std::vector<double> row_a(n), row_b(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sa += std::abs(x[i] - x[j]);
      sb += std::abs(y[i] - y[j]);
    }
    row_a[i] = sa / static_cast<double>(n);
    row_b[i] = sb / static_cast<double>(n);
  }
  const double grand_a = std::accumulate(row_a.begin(), row_a.end(), 0.0) / static_cast<double>(n);
  const double grand_b = std::accumulate(row_b.begin(), row_b.end(), 0.0) / static_cast<double>(n);

  // Per-row partial sums keep the result independent of the thread count.
  std::vector<double> ab(n), aa(n), bb(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double s_ab = 0.0, s_aa = 0.0, s_bb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = std::abs(x[i] - x[j]) - row_a[i] - row_a[j] + grand_a;
      const double b = std::abs(y[i] - y[j]) - row_b[i] - row_b[j] + grand_b;
      s_ab += a * b;
      s_aa += a * a;
      s_bb += b * b;
    }
    ab[i] = s_ab;
    aa[i] = s_aa;
    bb[i] = s_bb;
  }
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const double dcov2 = std::accumulate(ab.begin(), ab.end(), 0.0) / n2;
  const double dvar_x = std::accumulate(aa.begin(), aa.end(), 0.0) / n2;
  const double dvar_y = std::accumulate(bb.begin(), bb.end(), 0.0) / n2;
  const double denom = std::sqrt(dvar_x * dvar_y);
  if (denom <= 0.0) return 0.0;
  return std::sqrt(std::max(0.0, dcov2) / denom);
}

double dcor(const SeriesPair& pair) { return dcor(pair.x, pair.y); }

}  // namespace amic
