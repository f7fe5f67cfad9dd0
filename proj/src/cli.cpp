#include "amic/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "amic/bench.hpp"
#include "amic/error.hpp"
#include "amic/parallel.hpp"
#include "amic/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace amic {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kMaxK = 64;

std::string number(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string fixed(double x, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

std::size_t default_workers() {
#ifdef _OPENMP
  return static_cast<std::size_t>(std::max(1, omp_get_max_threads()));
#else
  return 1;
#endif
}

Sign parse_sign(const std::string& s) {
  if (s == "positive") return Sign::positive;
  if (s == "negative") return Sign::negative;
  if (s == "neither") return Sign::neither;
  throw Error("unknown sign '" + s + "'");
}

struct PairInput {
  std::string x;
  std::string y;
  std::int64_t resolution = 0;
  std::string agg = "mean";
};

void add_pair_flags(CLI::App* cmd, PairInput& in) {
  cmd->add_option("--x", in.x, "CSV file (timestamp,value) for X")->required();
  cmd->add_option("--y", in.y, "CSV file (timestamp,value) for Y")->required();
  cmd->add_option("--resolution", in.resolution, "resample both series to this step in seconds")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--agg", in.agg, "aggregator used when resampling")->check(CLI::IsMember({"mean", "sum"}));
}

SeriesPair load_pair(const PairInput& in) {
  auto prepare = [&](const std::string& path) {
    RawSeries raw = load_series(path);
    RawSeries cleaned = clean(raw, native_step(raw));
    if (in.resolution > 0) {
      cleaned = resample(cleaned, in.resolution, in.agg == "sum" ? Aggregator::sum : Aggregator::mean);
    }
    return cleaned;
  };
  return align_pair(prepare(in.x), prepare(in.y));
}

struct AnalyzeOptions {
  PairInput pair;
  int k = 6;
  std::string ladder;
  std::size_t g_max = 0;
  std::size_t g_min = 0;
  double slide_frac = 0.125;
  std::string mode = "two-step";
  double sigma = 0.0;
  double sigma_h = 0.2;
  double sigma_i = 0.2;
  std::string norm = "entropy";
  double coverage = 0.0;
  std::size_t partitions = 0;
  std::size_t workers = 0;
  std::string out;
  std::string format = "jsonl";

  CLI::Option* sigma_opt = nullptr;
  CLI::Option* sigma_h_opt = nullptr;
  CLI::Option* coverage_opt = nullptr;
  CLI::Option* ladder_opt = nullptr;
  CLI::Option* g_max_opt = nullptr;
  CLI::Option* g_min_opt = nullptr;
};

SearchConfig build_config(const AnalyzeOptions& o, std::size_t n) {
  SearchConfig config;
  if (o.k < 1 || o.k > kMaxK) throw UsageError("--k must lie in [1, 64]");
  config.k = o.k;
  if (!(o.slide_frac > 0.0 && o.slide_frac <= 1.0)) throw UsageError("--slide-frac must lie in (0, 1]");
  config.slide_frac = o.slide_frac;
  config.workers = o.workers == 0 ? default_workers() : o.workers;
  config.partitions = o.partitions == 0 ? config.workers : o.partitions;

  const NmiNorm norm = o.norm == "max" ? NmiNorm::max_entropy : NmiNorm::window_entropy;
  auto unit = [](double v, const char* flag) {
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError(std::string(flag) + " must lie in [0, 1]");
  };
  if (o.mode == "absolute") {
    if (o.sigma_opt->count() == 0) throw UsageError("--sigma is required with --threshold-mode absolute");
    if (!(o.sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
    config.threshold = AbsoluteThreshold{o.sigma};
  } else if (o.mode == "two-step") {
    unit(o.sigma_h, "--sigma-h");
    unit(o.sigma_i, "--sigma-i");
    config.threshold = TwoStepThreshold{o.sigma_h, o.sigma_i, norm};
  } else {
    if (o.coverage_opt->count() == 0) throw UsageError("--coverage is required with --threshold-mode coverage");
    if (!(o.coverage >= 0.0 && o.coverage <= 1.0)) throw UsageError("--coverage must lie in [0, 1]");
    CoverageThreshold c;
    c.target = o.coverage;
    if (o.sigma_h_opt->count() > 0) {
      unit(o.sigma_h, "--sigma-h");
      c.inner = TwoStepThreshold{o.sigma_h, 0.0, norm};
    }
    config.threshold = c;
  }

  if (o.ladder_opt->count() > 0) {
    if (o.g_max_opt->count() > 0 || o.g_min_opt->count() > 0) throw UsageError("--ladder excludes --g-max/--g-min");
    config.ladder = parse_size_list(o.ladder, "--ladder");
  } else if (o.g_max_opt->count() > 0 || o.g_min_opt->count() > 0) {
    const std::size_t g_min = o.g_min_opt->count() > 0 ? o.g_min : config.min_window_size();
    const std::size_t g_max = o.g_max_opt->count() > 0 ? o.g_max : n / 4;
    if (g_min < config.min_window_size()) throw UsageError("--g-min must be >= max(k+2, 24)");
    if (g_max < g_min) throw UsageError("--g-max must be >= --g-min");
    for (std::size_t g = g_max; g >= g_min && g > 0; g /= 2) config.ladder.push_back(g);
    if (config.ladder.back() != g_min) config.ladder.push_back(g_min);
  }
  return config;
}

void write_windows(std::ostream& os, const std::vector<WindowResult>& windows, const std::string& format) {
  if (format == "jsonl") {
    for (const WindowResult& w : windows) os << window_to_jsonl(w) << '\n';
    return;
  }
  os << std::left << std::setw(22) << "From" << std::setw(22) << "To" << std::setw(8) << "g" << std::setw(10) << "MI"
     << std::setw(8) << "H~" << std::setw(8) << "I~2" << std::setw(8) << "mu" << std::setw(10) << "sign"
     << "confidence\n";
  for (const WindowResult& w : windows) {
    os << std::left << std::setw(22) << format_timestamp(w.start_ts) << std::setw(22) << format_timestamp(w.end_ts)
       << std::setw(8) << w.granularity << std::setw(10) << fixed(w.mi, 6) << std::setw(8) << fixed(w.h_norm, 3)
       << std::setw(8) << fixed(w.nmi2, 3) << std::setw(8) << fixed(w.mu, 3) << std::setw(10) << to_string(w.sign)
       << fixed(w.confidence, 3) << '\n';
  }
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  const SeriesPair pair = load_pair(o.pair);
  const SearchConfig config = build_config(o, pair.size());
  const RankedPair ranked = rank_transform(pair);
  if (ranked.size() < config.min_window_size()) throw Error("aligned series shorter than the minimum window");

  SearchResult result;
  if (const auto* c = std::get_if<CoverageThreshold>(&config.threshold)) {
    CoverageTuning tuned = tune_sigma_for_coverage(ranked, config, c->target);
    err << "coverage " << fixed(tuned.coverage, 4) << " at sigma " << fixed(tuned.sigma, 6) << " after "
        << tuned.iterations << " rounds\n";
    result = std::move(tuned.result);
  } else {
    result = recursive_parallel_search(ranked, config);
  }

  if (o.out.empty()) {
    write_windows(out, result.windows, o.format);
  } else {
    std::ofstream file(o.out);
    if (!file) throw Error("cannot write " + o.out);
    write_windows(file, result.windows, o.format);
    if (!file) throw Error("write failed for " + o.out);
  }
  return kExitOk;
}

int cmd_rank(const std::string& in, std::size_t top, const std::string& format, std::ostream& out) {
  std::ifstream file(in);
  if (!file) throw Error("cannot read " + in);
  std::vector<WindowResult> windows;
  std::string line;
  for (std::size_t number = 1; std::getline(file, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      windows.push_back(window_from_jsonl(line));
    } catch (const std::exception& e) {
      throw Error(in + ": line " + std::to_string(number) + ": " + e.what());
    }
  }
  std::vector<WindowResult> ranked = ranking(std::move(windows));
  if (ranked.size() > top) ranked.resize(top);
  if (format == "jsonl") {
    write_windows(out, ranked, format);
    return kExitOk;
  }
  if (ranked.empty()) return kExitOk;
  out << std::left << std::setw(6) << "Rank" << std::setw(22) << "From" << std::setw(22) << "To" << std::setw(12)
      << "MI" << "Sign\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const WindowResult& w = ranked[i];
    out << std::left << std::setw(6) << i + 1 << std::setw(22) << format_timestamp(w.start_ts) << std::setw(22)
        << format_timestamp(w.end_ts) << std::setw(12) << fixed(w.mi, 6) << to_string(w.sign) << '\n';
  }
  return kExitOk;
}

int cmd_compare(const PairInput& in, int k, std::ostream& out) {
  if (k < 1 || k > kMaxK) throw UsageError("--k must lie in [1, 64]");
  const SeriesPair pair = load_pair(in);
  const double pcc = pearson(pair);
  const double dc = dcor(pair);
  const RankedPair ranked = rank_transform(pair);
  const MiEstimate mi = ksg_mi(CloudView{ranked.u, ranked.v}, k);
  out << "mi_raw,mi,pcc,dcor\n";
  out << number(mi.raw) << ',' << number(mi.clamped) << ',' << number(pcc) << ',' << number(dc)
      << '\n';
  return kExitOk;
}

struct SynthOptions {
  std::string relation;
  std::string compose;
  std::size_t n = 2000;
  std::size_t gap = 1000;
  double noise = kDefaultNoise;
  std::uint64_t seed = 0;
  std::string out = "synth";
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  if (o.relation.empty() == o.compose.empty()) throw UsageError("give exactly one of --relation or --compose");
  if (o.n < 10) throw UsageError("--n must be >= 10");
  if (!(o.noise >= 0.0)) throw UsageError("--noise must be >= 0");
  std::vector<RelationKind> kinds;
  const std::string names = o.relation.empty() ? o.compose : o.relation;
  std::stringstream ss(names);
  for (std::string name; std::getline(ss, name, ',');) {
    try {
      kinds.push_back(parse_relation(name));
    } catch (const Error& e) {
      throw UsageError(std::string(o.relation.empty() ? "--compose: " : "--relation: ") + e.what());
    }
  }
  if (kinds.empty()) throw UsageError("no relation given");
  if (!o.relation.empty() && kinds.size() != 1) throw UsageError("--relation takes a single name; use --compose");

  const Composition comp = compose(kinds, o.n, o.relation.empty() ? o.gap : 0, o.seed, o.noise);
  RawSeries x{comp.pair.timestamps, comp.pair.x};
  RawSeries y{comp.pair.timestamps, comp.pair.y};
  const std::string x_path = o.out + "_x.csv";
  const std::string y_path = o.out + "_y.csv";
  const std::string truth_path = o.out + "_truth.json";
  save_series(x_path, x);
  save_series(y_path, y);

  ordered_json truth = ordered_json::array();
  for (const GroundTruthSpan& s : comp.spans) {
    truth.push_back({{"kind", std::string(to_string(s.kind))}, {"s_idx", s.s_idx}, {"e_idx", s.e_idx}});
  }
  std::ofstream file(truth_path);
  if (!file) throw Error("cannot write " + truth_path);
  file << truth.dump(2) << '\n';
  if (!file) throw Error("write failed for " + truth_path);
  out << x_path << '\n' << y_path << '\n' << truth_path << '\n';
  return kExitOk;
}

int cmd_bench(const std::string& sizes_csv, const std::string& mode, std::uint64_t seed, int k, std::ostream& out) {
  if (k < 1 || k > kMaxK) throw UsageError("--k must lie in [1, 64]");
  const std::vector<std::size_t> sizes = parse_size_list(sizes_csv, "--sizes");
  for (const std::size_t n : sizes) {
    if (n < 1000) throw UsageError("--sizes entries must be >= 1000");
  }
  std::vector<BenchMode> modes;
  if (mode != "brute") modes.push_back(BenchMode::incremental);
  if (mode != "incremental") modes.push_back(BenchMode::brute);

  out << "size,mode,window,slide,windows,seconds,checksum\n";
  for (const std::size_t n : sizes) {
    const RankedPair pair = bench_data(n, seed);
    const BenchScan scan = bench_scan_for(n);
    for (const BenchMode m : modes) {
      const auto t0 = std::chrono::steady_clock::now();
      const BenchRun run = run_bench_scan(pair, scan, m, k);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out << n << ',' << (m == BenchMode::incremental ? "incremental" : "brute") << ',' << scan.window << ','
          << scan.slide << ',' << run.windows << ',' << fixed(seconds, 4) << ',' << number(run.checksum) << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

std::string window_to_jsonl(const WindowResult& w) {
  ordered_json j;
  j["s_idx"] = w.s_idx;
  j["e_idx"] = w.e_idx;
  j["start_ts"] = w.start_ts;
  j["end_ts"] = w.end_ts;
  j["granularity"] = w.granularity;
  j["mi_raw"] = w.mi_raw;
  j["mi"] = w.mi;
  j["h_w"] = w.h_w;
  j["h_norm"] = w.h_norm;
  j["nmi1"] = w.nmi1;
  j["nmi2"] = w.nmi2;
  j["mu"] = w.mu;
  j["sign"] = std::string(to_string(w.sign));
  j["confidence"] = w.confidence;
  return j.dump();
}

WindowResult window_from_jsonl(std::string_view line) {
  const ordered_json j = ordered_json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("not a JSON object");
  auto need = [&](const char* key) -> const ordered_json& {
    const auto it = j.find(key);
    if (it == j.end()) throw Error(std::string("missing field ") + key);
    return *it;
  };
  auto index = [&](const char* key) {
    const ordered_json& v = need(key);
    if (!v.is_number_unsigned()) throw Error(std::string("field ") + key + " must be a non-negative integer");
    return v.get<std::size_t>();
  };
  auto real = [&](const char* key) {
    const ordered_json& v = need(key);
    if (!v.is_number()) throw Error(std::string("field ") + key + " must be a number");
    return v.get<double>();
  };
  auto stamp = [&](const char* key) {
    const ordered_json& v = need(key);
    if (!v.is_number_integer()) throw Error(std::string("field ") + key + " must be an integer");
    return v.get<Timestamp>();
  };
  WindowResult w;
  w.s_idx = index("s_idx");
  w.e_idx = index("e_idx");
  if (w.s_idx >= w.e_idx) throw Error("s_idx must be below e_idx");
  w.start_ts = stamp("start_ts");
  w.end_ts = stamp("end_ts");
  w.granularity = index("granularity");
  w.mi_raw = real("mi_raw");
  w.mi = real("mi");
  w.h_w = real("h_w");
  w.h_norm = real("h_norm");
  w.nmi1 = real("nmi1");
  w.nmi2 = real("nmi2");
  w.mu = real("mu");
  const ordered_json& sign = need("sign");
  if (!sign.is_string()) throw Error("field sign must be a string");
  w.sign = parse_sign(sign.get<std::string>());
  w.confidence = real("confidence");
  return w;
}

std::vector<std::size_t> parse_size_list(std::string_view csv, std::string_view flag) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = std::min(csv.find(',', start), csv.size());
    const std::string_view item = csv.substr(start, comma - start);
    std::size_t value = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size() || value == 0) {
      throw UsageError(std::string(flag) + ": '" + std::string(item) + "' is not a positive integer");
    }
    sizes.push_back(value);
    start = comma + 1;
  }
  return sizes;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"amic: multi-scale mutual-information correlation search", "amic"};
  app.require_subcommand(1);

  AnalyzeOptions analyze;
  CLI::App* a = app.add_subcommand("analyze", "search a pair of series for correlated windows");
  add_pair_flags(a, analyze.pair);
  a->add_option("--k", analyze.k, "KSG neighbour count");
  analyze.ladder_opt = a->add_option("--ladder", analyze.ladder, "window sizes, largest first (CSV)");
  analyze.g_max_opt = a->add_option("--g-max", analyze.g_max, "largest window; halving ladder");
  analyze.g_min_opt = a->add_option("--g-min", analyze.g_min, "smallest window; halving ladder");
  a->add_option("--slide-frac", analyze.slide_frac, "slide as a fraction of the window");
  a->add_option("--threshold-mode", analyze.mode)->check(CLI::IsMember({"absolute", "two-step", "coverage"}));
  analyze.sigma_opt = a->add_option("--sigma", analyze.sigma, "absolute MI threshold");
  analyze.sigma_h_opt = a->add_option("--sigma-h", analyze.sigma_h, "normalized entropy threshold");
  a->add_option("--sigma-i", analyze.sigma_i, "normalized MI threshold");
  a->add_option("--norm", analyze.norm, "MI normalization")->check(CLI::IsMember({"max", "entropy"}));
  analyze.coverage_opt = a->add_option("--coverage", analyze.coverage, "target data coverage");
  a->add_option("--partitions", analyze.partitions, "map tasks per segment (default: workers)");
  a->add_option("--workers", analyze.workers, "parallel workers (default: all threads)");
  a->add_option("--out", analyze.out, "output file (default: stdout)");
  a->add_option("--format", analyze.format)->check(CLI::IsMember({"jsonl", "table"}));

  std::string rank_in;
  std::size_t rank_top = 10;
  std::string rank_format = "table";
  CLI::App* r = app.add_subcommand("rank", "rank windows from an analyze run by MI");
  r->add_option("--in", rank_in, "JSON-Lines file from analyze")->required();
  r->add_option("--top", rank_top, "number of windows to print");
  r->add_option("--format", rank_format)->check(CLI::IsMember({"jsonl", "table"}));

  PairInput compare;
  int compare_k = 6;
  CLI::App* c = app.add_subcommand("compare", "whole-series MI, Pearson and distance correlation");
  add_pair_flags(c, compare);
  c->add_option("--k", compare_k, "KSG neighbour count");

  SynthOptions synth;
  CLI::App* s = app.add_subcommand("synth", "generate synthetic relations");
  s->add_option("--relation", synth.relation, "relation name");
  s->add_option("--compose", synth.compose, "relation names separated by commas");
  s->add_option("--n", synth.n, "samples per relation");
  s->add_option("--gap", synth.gap, "noise samples between composed relations");
  s->add_option("--noise", synth.noise, "standard deviation of the additive noise");
  s->add_option("--seed", synth.seed, "generator seed");
  s->add_option("--out", synth.out, "output prefix");

  std::string bench_sizes = "1000,4000,16000,50000";
  std::string bench_mode = "both";
  std::uint64_t bench_seed = 1;
  int bench_k = 6;
  CLI::App* b = app.add_subcommand("bench", "time incremental and brute-force sliding scans");
  b->add_option("--sizes", bench_sizes, "series sizes (CSV)");
  b->add_option("--mode", bench_mode)->check(CLI::IsMember({"incremental", "brute", "both"}));
  b->add_option("--seed", bench_seed, "data seed");
  b->add_option("--k", bench_k, "KSG neighbour count");

  std::vector<const char*> argv;
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    CLI::App* shown = &app;
    for (CLI::App* sub : app.get_subcommands()) shown = sub;
    out << shown->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    CLI::App* shown = &app;
    for (CLI::App* sub : app.get_subcommands()) shown = sub;
    err << "error: " << e.what() << "\n\n" << shown->help();
    return kExitUsage;
  }

  try {
    if (a->parsed()) return cmd_analyze(analyze, out, err);
    if (r->parsed()) return cmd_rank(rank_in, rank_top, rank_format, out);
    if (c->parsed()) return cmd_compare(compare, compare_k, out);
    if (s->parsed()) return cmd_synth(synth, out);
    if (b->parsed()) return cmd_bench(bench_sizes, bench_mode, bench_seed, bench_k, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.empty()) args.emplace_back("amic");
  return run_cli(args, out, err);
}

}  // namespace amic
