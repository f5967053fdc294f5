#include <benchmark/benchmark.h>

#include "spdcsim/photostats.hpp"

using namespace spdcsim;

namespace {

photostats::TimeTagStream stream_of(double seconds) {
  return photostats::simulate_timetags({}, {454.0, 462.0}, {}, seconds, 7);
}

}  // namespace

static void BM_SimulateTimetags(benchmark::State& state) {
  const double seconds = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(stream_of(seconds));
}
BENCHMARK(BM_SimulateTimetags)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_CoincidenceHistogram(benchmark::State& state) {
  const auto stream = stream_of(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(photostats::coincidence_histogram(stream, 10.0, 25.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.events.size()));
}
BENCHMARK(BM_CoincidenceHistogram)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_CarFromStream(benchmark::State& state) {
  const auto stream = stream_of(10.0);
  const photostats::DetectionChain chain;
  for (auto _ : state) {
    benchmark::DoNotOptimize(photostats::car_from_stream(stream, chain, 50.0, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_CarFromStream)->Arg(1)->Arg(10'000)->Unit(benchmark::kMillisecond);
