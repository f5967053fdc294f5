#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spdcsim/fitting.hpp"

using namespace spdcsim;

static void BM_FitLorentzian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = -5.0 + 10.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = fitting::lorentzian(x[i], 0.3, 0.458, 1.0, 0.1) + noise(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fitting::fit_lorentzian(x, y));
}
BENCHMARK(BM_FitLorentzian)->Arg(101)->Arg(1001)->Unit(benchmark::kMicrosecond);

static void BM_FitExpG2(benchmark::State& state) {
  std::vector<double> t, y;
  for (int i = -200; i <= 200; ++i) {
    t.push_back(i * 0.025);
    y.push_back(500.0 * std::exp(-2.0 * 3.141592653589793 * 0.458 * std::abs(t.back())) + 2.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fitting::fit_exp_g2(t, y));
}
BENCHMARK(BM_FitExpG2)->Unit(benchmark::kMicrosecond);
