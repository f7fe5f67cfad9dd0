#include "amic/association.hpp"

#include <cmath>

#include "amic/error.hpp"

namespace amic {

std::string_view to_string(Sign sign) {
  switch (sign) {
    case Sign::positive: return "positive";
    case Sign::negative: return "negative";
    case Sign::neither: return "neither";
  }
  return "neither";
}

PeriodCounts count_periods(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("count_periods: series lengths differ");
  if (x.size() < 2) throw Error("count_periods: window needs at least 2 samples");
  PeriodCounts counts;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double dx = x[i + 1] - x[i];
    const double dy = y[i + 1] - y[i];
    if (dx == 0.0 || dy == 0.0) continue;
    if ((dx > 0.0) == (dy > 0.0)) ++counts.pp; else ++counts.np;
  }
  return counts;
}

double association_degree(std::size_t pp, std::size_t np, std::size_t n) {
  if (n < 2) throw Error("association_degree: window needs at least 2 samples");
  if (pp + np > n - 1) throw Error("association_degree: pp + np exceeds the number of steps");
  return (static_cast<double>(pp) - static_cast<double>(np)) / static_cast<double>(n - 1);
}

Classification classify(std::size_t pp, std::size_t np, double mu) {
  const double diff = std::abs(static_cast<double>(pp) - static_cast<double>(np));
  if (mu > 0.0) {
    if (pp == 0) throw Error("classify: positive degree with no positive periods");
    return {Sign::positive, diff / static_cast<double>(pp)};
  }
  if (mu < 0.0) {
    if (np == 0) throw Error("classify: negative degree with no negative periods");
    return {Sign::negative, diff / static_cast<double>(np)};
  }
  return {Sign::neither, 1.0 - std::abs(mu)};
}

AssociationStats associate(std::span<const double> x, std::span<const double> y) {
  const PeriodCounts counts = count_periods(x, y);
  AssociationStats stats;
  stats.pp = counts.pp;
  stats.np = counts.np;
  stats.mu = association_degree(counts.pp, counts.np, x.size());
  const Classification c = classify(counts.pp, counts.np, stats.mu);
  stats.sign = c.sign;
  stats.confidence = c.confidence;
  return stats;
}

}  // namespace amic
