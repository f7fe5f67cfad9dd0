#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace amic {

enum class Sign { positive, negative, neither };

std::string_view to_string(Sign sign);

struct PeriodCounts {
  std::size_t pp = 0;  // consecutive steps where x and y move the same way
  std::size_t np = 0;  // steps where they move in opposite directions
};

struct AssociationStats {
  std::size_t pp = 0;
  std::size_t np = 0;
  double mu = 0.0;
  Sign sign = Sign::neither;
  double confidence = 0.0;
};

// Steps with a tie in either coordinate count toward neither total.
PeriodCounts count_periods(std::span<const double> x, std::span<const double> y);

// mu = (pp - np) / (n - 1)
double association_degree(std::size_t pp, std::size_t np, std::size_t n);

struct Classification {
  Sign sign = Sign::neither;
  double confidence = 0.0;
};

// positive: |pp - np| / pp, negative: |pp - np| / np, neither: 1 - |mu|.
Classification classify(std::size_t pp, std::size_t np, double mu);

AssociationStats associate(std::span<const double> x, std::span<const double> y);

}  // namespace amic
