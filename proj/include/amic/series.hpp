#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace amic {

using Timestamp = std::int64_t;  // epoch seconds

struct RawSeries {
  std::vector<Timestamp> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

// Two aligned series sharing one timestamp axis.
struct SeriesPair {
  std::vector<Timestamp> timestamps;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
};

// Average-rank copula of a SeriesPair. u and v live in [0,1]; the source pair
// is kept so reports can use raw values and timestamps.
struct RankedPair {
  SeriesPair source;
  std::vector<double> u;
  std::vector<double> v;

  std::size_t size() const { return u.size(); }
};

enum class Aggregator { mean, sum };

// Parses "2012-10-29T00:00:00Z", "2012-10-29T02:00:00+02:00" or a bare
// integer into epoch seconds. Fractional seconds are truncated.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

RawSeries load_series(const std::filesystem::path& path);
void save_series(const std::filesystem::path& path, const RawSeries& series);

// Most frequent positive spacing between consecutive timestamps.
Timestamp native_step(const RawSeries& series);

RawSeries clean(const RawSeries& series, Timestamp grid_step);
RawSeries resample(const RawSeries& series, Timestamp resolution, Aggregator agg);
SeriesPair align_pair(const RawSeries& a, const RawSeries& b);

// u_i = (avg_rank(x_i) - 1) / (N - 1), ties share the average rank.
std::vector<double> rank_values(const std::vector<double>& values);
RankedPair rank_transform(const SeriesPair& pair);

}  // namespace amic
