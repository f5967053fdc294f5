#include <benchmark/benchmark.h>

#include "spdcsim/measurement.hpp"
#include "spdcsim/polarization.hpp"

using namespace spdcsim;

static void BM_ChshMax(benchmark::State& state) {
  const auto rho = polarization::degraded_state(3.141592653589793, 0.8709);
  for (auto _ : state) benchmark::DoNotOptimize(measurement::chsh_max(rho));
}
BENCHMARK(BM_ChshMax)->Unit(benchmark::kMillisecond);

static void BM_ChshCanonical(benchmark::State& state) {
  const auto rho = polarization::degraded_state(3.141592653589793, 0.8709);
  const auto settings = measurement::BellSettings::canonical_phi_minus();
  for (auto _ : state) benchmark::DoNotOptimize(measurement::chsh_S(rho, settings));
}
BENCHMARK(BM_ChshCanonical);

static void BM_PropagateNetwork(benchmark::State& state) {
  const auto net = polarization::ElementNet::canonical();
  for (auto _ : state) benchmark::DoNotOptimize(polarization::propagate_network(net, 3.141592653589793));
}
BENCHMARK(BM_PropagateNetwork)->Unit(benchmark::kMicrosecond);
