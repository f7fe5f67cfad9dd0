#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "amic/series.hpp"

namespace amic {

enum class RelationKind {
  independent,
  independent_outliers,
  linear,
  linear_outliers,
  exponential,
  quadratic,
  diamond,
  circle,
  sine,
  cross,
};

inline constexpr double kDefaultNoise = 0.05;
inline constexpr Timestamp kSynthEpoch = 1351468800;  // 2012-10-29T00:00:00Z
inline constexpr Timestamp kSynthStep = 60;

std::string_view to_string(RelationKind kind);
RelationKind parse_relation(std::string_view name);  // throws on unknown names
const std::vector<RelationKind>& all_relations();

struct GroundTruthSpan {
  RelationKind kind = RelationKind::independent;
  std::size_t s_idx = 0;
  std::size_t e_idx = 0;  // exclusive
};

// Deterministic in (kind, n, noise, seed). Timestamps start at kSynthEpoch
// with kSynthStep spacing. Noise is the standard deviation of the additive
// Gaussian term.
SeriesPair gen_relation(RelationKind kind, std::size_t n, double noise, std::uint64_t seed);

struct Composition {
  SeriesPair pair;
  std::vector<GroundTruthSpan> spans;
};

// relation, gap, relation, ...; gaps hold independent uniform noise.
Composition compose(const std::vector<RelationKind>& relations, std::size_t n_each, std::size_t gap,
                    std::uint64_t seed, double noise = kDefaultNoise);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
double pearson(const SeriesPair& pair);

// Distance correlation (V-statistic) by double centring, O(n^2) time and
// O(n) memory.
double dcor(const std::vector<double>& x, const std::vector<double>& y);
double dcor(const SeriesPair& pair);

}  // namespace amic
