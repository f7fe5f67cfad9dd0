#include <benchmark/benchmark.h>

#include "amic/bench.hpp"
#include "amic/parallel.hpp"
#include "amic/search.hpp"

namespace {

void sliding_scan(benchmark::State& state, amic::BenchMode mode) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const amic::RankedPair pair = amic::bench_data(n, 1);
  const amic::BenchScan scan = amic::bench_scan_for(n);
  for (auto _ : state) {
    const amic::BenchRun run = amic::run_bench_scan(pair, scan, mode);
    benchmark::DoNotOptimize(run.checksum);
  }
  state.counters["windows"] = static_cast<double>(amic::run_bench_scan(pair, scan, mode).windows);
}

void BM_ScanIncremental(benchmark::State& state) { sliding_scan(state, amic::BenchMode::incremental); }
void BM_ScanBrute(benchmark::State& state) { sliding_scan(state, amic::BenchMode::brute); }

BENCHMARK(BM_ScanIncremental)->Arg(1000)->Arg(4000)->Arg(16000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScanBrute)->Arg(1000)->Arg(4000)->Arg(16000)->Unit(benchmark::kMillisecond);

void BM_LayeredSerial(benchmark::State& state) {
  const amic::RankedPair pair = amic::bench_data(static_cast<std::size_t>(state.range(0)), 2);
  amic::SearchConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(amic::layered_search(pair, config).windows.size());
}

void BM_RecursiveParallel(benchmark::State& state) {
  const amic::RankedPair pair = amic::bench_data(static_cast<std::size_t>(state.range(0)), 2);
  amic::SearchConfig config;
  config.workers = static_cast<std::size_t>(state.range(1));
  config.partitions = config.workers;
  for (auto _ : state) benchmark::DoNotOptimize(amic::recursive_parallel_search(pair, config).windows.size());
}

BENCHMARK(BM_LayeredSerial)->Arg(8000)->Arg(32000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RecursiveParallel)->Args({8000, 1})->Args({8000, 4})->Args({32000, 1})->Args({32000, 4})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
