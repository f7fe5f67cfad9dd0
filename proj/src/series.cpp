#include "amic/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "amic/error.hpp"

namespace amic {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                        s.front() == '\xEF' || s.front() == '\xBB' || s.front() == '\xBF')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool is_integer_timestamp(std::string_view s) {
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool fixed_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  return parse_int(s.substr(pos, len), out);
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  const std::string_view s = trim(text);
  if (is_integer_timestamp(s)) {
    Timestamp ts = 0;
    std::string_view digits = s;
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    if (!parse_int(digits, ts)) throw Error("timestamp out of range: " + std::string(s));
    return ts;
  }

  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (s.size() < 20 || !fixed_digits(s, 0, 4, year) || s[4] != '-' || !fixed_digits(s, 5, 2, month) ||
      s[7] != '-' || !fixed_digits(s, 8, 2, day) || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
      !fixed_digits(s, 11, 2, hour) || s[13] != ':' || !fixed_digits(s, 14, 2, minute) || s[16] != ':' ||
      !fixed_digits(s, 17, 2, second)) {
    throw Error("unparseable timestamp: " + std::string(s));
  }
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t frac_begin = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == frac_begin) throw Error("unparseable timestamp: " + std::string(s));
  }
  Timestamp offset = 0;
  const std::string_view zone = s.substr(pos);
  if (zone == "Z" || zone == "z") {
    offset = 0;
  } else if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
    int oh = 0, om = 0;
    if (!fixed_digits(zone, 1, 2, oh) || !fixed_digits(zone, 4, 2, om) || oh > 23 || om > 59) {
      throw Error("bad UTC offset in timestamp: " + std::string(s));
    }
    offset = (zone[0] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
  } else {
    throw Error("timestamp lacks Z or UTC offset: " + std::string(s));
  }
  if (hour > 23 || minute > 59 || second > 60) throw Error("invalid time of day: " + std::string(s));

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw Error("invalid calendar date: " + std::string(s));
  const Timestamp days = sys_days{ymd}.time_since_epoch().count();
  return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{ts}};
  const auto day_point = floor<days>(tp);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{tp - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

RawSeries load_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());

  RawSeries series;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  int form = -1;  // 0 = epoch integers, 1 = RFC 3339
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (row != "timestamp,value") {
        throw Error(path.string() + ": expected header 'timestamp,value' on line " + std::to_string(line_no));
      }
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw Error(path.string() + ": malformed row " + std::to_string(line_no));
    }
    const std::string_view ts_text = trim(row.substr(0, comma));
    const std::string_view value_text = trim(row.substr(comma + 1));

    const int this_form = is_integer_timestamp(ts_text) ? 0 : 1;
    if (form == -1) form = this_form;
    if (form != this_form) {
      throw Error(path.string() + ": mixed timestamp forms at row " + std::to_string(line_no));
    }
    Timestamp ts = 0;
    try {
      ts = parse_timestamp(ts_text);
    } catch (const Error& e) {
      throw Error(path.string() + ": row " + std::to_string(line_no) + ": " + e.what());
    }
    double value = 0.0;
    auto [p, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (value_text.empty() || ec != std::errc{} || p != value_text.data() + value_text.size()) {
      throw Error(path.string() + ": unparseable value at row " + std::to_string(line_no));
    }
    series.timestamps.push_back(ts);
    series.values.push_back(value);
  }
  if (series.values.empty()) throw Error(path.string() + ": empty series");
  return series;
}

void save_series(const std::filesystem::path& path, const RawSeries& series) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "timestamp,value\n";
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, series.values[i]);
    out << series.timestamps[i] << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf)) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

Timestamp native_step(const RawSeries& series) {
  std::map<Timestamp, std::size_t> histogram;
  for (std::size_t i = 1; i < series.timestamps.size(); ++i) {
    const Timestamp d = series.timestamps[i] - series.timestamps[i - 1];
    if (d > 0) ++histogram[d];
  }
  if (histogram.empty()) throw Error("series has fewer than 2 distinct timestamps");
  Timestamp best = histogram.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [step, count] : histogram) {
    if (count > best_count) {
      best = step;
      best_count = count;
    }
  }
  return best;
}

RawSeries clean(const RawSeries& series, Timestamp grid_step) {
  if (series.values.empty()) throw Error("clean: empty series");
  if (grid_step <= 0) throw Error("clean: grid step must be positive");

  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series.timestamps[a] < series.timestamps[b]; });

  // First occurrence wins; non-finite values are treated as missing.
  std::vector<Timestamp> ts;
  std::vector<double> vs;
  for (const std::size_t i : order) {
    const Timestamp t = series.timestamps[i];
    if (!ts.empty() && ts.back() == t) continue;
    if (!std::isfinite(series.values[i])) continue;
    ts.push_back(t);
    vs.push_back(series.values[i]);
  }
  if (ts.size() < 2) throw Error("clean: fewer than 2 distinct timestamps");

  RawSeries out;
  std::size_t hi = 0;
  for (Timestamp t = ts.front(); t <= ts.back(); t += grid_step) {
    while (ts[hi] < t) ++hi;
    double value = vs[hi];
    if (ts[hi] != t) {
      const double frac = static_cast<double>(t - ts[hi - 1]) / static_cast<double>(ts[hi] - ts[hi - 1]);
      value = vs[hi - 1] + frac * (vs[hi] - vs[hi - 1]);
    }
    out.timestamps.push_back(t);
    out.values.push_back(value);
  }
  return out;
}

RawSeries resample(const RawSeries& series, Timestamp resolution, Aggregator agg) {
  if (series.values.empty()) throw Error("resample: empty series");
  if (series.size() >= 2 && resolution < native_step(series)) {
    throw Error("resample: resolution " + std::to_string(resolution) + "s is finer than the native step");
  }
  if (resolution <= 0) throw Error("resample: resolution must be positive");

  RawSeries out;
  const Timestamp origin = series.timestamps.front();
  std::size_t count = 0;
  double acc = 0.0;
  Timestamp bucket = 0;
  auto flush = [&] {
    if (count == 0) return;
    out.timestamps.push_back(origin + bucket * resolution);
    out.values.push_back(agg == Aggregator::mean ? acc / static_cast<double>(count) : acc);
  };
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Timestamp offset = series.timestamps[i] - origin;
    const Timestamp b = offset >= 0 ? offset / resolution : -((-offset + resolution - 1) / resolution);
    if (count > 0 && b != bucket) {
      flush();
      count = 0;
      acc = 0.0;
    }
    bucket = b;
    acc += series.values[i];
    ++count;
  }
  flush();
  return out;
}

SeriesPair align_pair(const RawSeries& a, const RawSeries& b) {
  SeriesPair pair;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a.timestamps[i] < b.timestamps[j]) {
      ++i;
    } else if (b.timestamps[j] < a.timestamps[i]) {
      ++j;
    } else {
      pair.timestamps.push_back(a.timestamps[i]);
      pair.x.push_back(a.values[i]);
      pair.y.push_back(b.values[j]);
      ++i;
      ++j;
    }
  }
  if (pair.size() < 2) throw Error("align: series share fewer than 2 timestamps");
  return pair;
}

std::vector<double> rank_values(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw Error("rank transform needs at least 2 samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  const double denom = static_cast<double>(n - 1);
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo + 1;
    while (hi < n && values[order[hi]] == values[order[lo]]) ++hi;
    // 1-based ranks lo+1..hi share their mean; stored as (rank - 1).
    const double rank0 = 0.5 * static_cast<double>(lo + hi - 1);
    for (std::size_t p = lo; p < hi; ++p) ranks[order[p]] = rank0 / denom;
    lo = hi;
  }
  return ranks;
}

RankedPair rank_transform(const SeriesPair& pair) {
  if (pair.x.size() != pair.y.size() || pair.x.size() != pair.timestamps.size()) {
    throw Error("rank transform: series lengths differ");
  }
  RankedPair ranked;
  ranked.u = rank_values(pair.x);
  ranked.v = rank_values(pair.y);
  ranked.source = pair;
  return ranked;
}

}  // namespace amic
