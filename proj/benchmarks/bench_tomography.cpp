#include <benchmark/benchmark.h>

#include "spdcsim/polarization.hpp"
#include "spdcsim/tomography.hpp"

using namespace spdcsim;

static void BM_TomoMle(benchmark::State& state) {
  const auto truth = polarization::degraded_state(3.141592653589793, 0.88);
  const auto rec = tomography::tomo_simulate_counts(truth, static_cast<double>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(tomography::tomo_mle(rec));
}
BENCHMARK(BM_TomoMle)->Arg(100)->Arg(10'000)->Arg(1'000'000)->Unit(benchmark::kMicrosecond);

static void BM_TomoLinear(benchmark::State& state) {
  const auto truth = polarization::degraded_state(3.141592653589793, 0.88);
  const auto rec = tomography::tomo_simulate_counts(truth, 1e4, 1);
  for (auto _ : state) benchmark::DoNotOptimize(tomography::tomo_linear(rec));
}
BENCHMARK(BM_TomoLinear);

static void BM_Bootstrap(benchmark::State& state) {
  const auto truth = polarization::degraded_state(3.141592653589793, 0.88);
  const auto rec = tomography::tomo_simulate_counts(truth, 1e4, 1);
  const auto target = polarization::phi_minus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tomography::bootstrap_errors(
        rec, 100, [&](const polarization::TwoPhotonState& s) { return tomography::fidelity(s, target); }, 2,
        static_cast<unsigned>(state.range(0))));
  }
}
BENCHMARK(BM_Bootstrap)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
