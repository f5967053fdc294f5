// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "spdcsim/biphoton.hpp"
#include "spdcsim/cavity.hpp"
#include "spdcsim/fitting.hpp"
#include "spdcsim/measurement.hpp"
#include "spdcsim/photostats.hpp"
#include "spdcsim/polarization.hpp"
#include "spdcsim/tomography.hpp"

using namespace spdcsim;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kC = 0.8709;

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s %2d %-24s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void cluster_spacing() {
  const double s0 = cavity::cluster_spacing(57.91, 54.91) * 1e-3;
  const double s1 = cavity::cluster_spacing(57.41, 54.91) * 1e-3;
  const bool pass = rel(s0, 1.06) <= 0.01 && rel(s1, 1.26) <= 0.01;
  report(1, "cluster spacing", pass, fmt("%.5f THz vs 1.06, %.5f THz vs 1.26 (tol 1%%)", s0, s1));
}

void biphoton_fwhm() {
  const double t0 = biphoton::t_fwhm({454.0, 462.0});
  const double t1 = biphoton::t_fwhm({422.0, 384.0});
  const bool pass = rel(t0, 0.483) <= 0.005 && rel(t1, 0.550) <= 0.005;
  report(2, "biphoton FWHM", pass, fmt("%.5f ns vs 0.483, %.5f ns vs 0.550 (tol 0.5%%)", t0, t1));
}

void overlap() {
  const double r = biphoton::spectral_overlap({454.0, 462.0}, {422.0, 384.0});
  const bool pass = std::abs(r - 0.879) <= 0.005 && std::abs(r - 0.88) <= 0.005;
  report(3, "spectral overlap", pass, fmt("%.5f vs 0.879 and measured 0.88 (tol 0.005)", r));
}

// Brute-force 0.5 degree grid over all four analyzers. E comes from explicit
// Born sums; for fixed (b, b') the a and a' maximizations separate.
double chsh_grid_oracle(const polarization::DensityMatrix& m) {
  std::vector<std::vector<oracle::C>> rho(4, std::vector<oracle::C>(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rho[i][j] = m(i, j);
  constexpr int n = 360;
  std::vector<double> e(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = 0.5 * i, b = 0.5 * j;
      const double pp = oracle::born(rho, oracle::linear_pair(a, b));
      const double qq = oracle::born(rho, oracle::linear_pair(a + 90, b + 90));
      const double pq = oracle::born(rho, oracle::linear_pair(a, b + 90));
      const double qp = oracle::born(rho, oracle::linear_pair(a + 90, b));
      e[i * n + j] = (pp + qq - pq - qp) / (pp + qq + pq + qp);
    }
  }
  double best = 0.0;
  for (int b = 0; b < n; ++b) {
    for (int bp = 0; bp < n; ++bp) {
      double x = -2.0, y = -2.0;
      for (int a = 0; a < n; ++a) {
        x = std::max(x, e[a * n + b] - e[a * n + bp]);
        y = std::max(y, e[a * n + b] + e[a * n + bp]);
      }
      best = std::max(best, x + y);
    }
  }
  return best;
}

void chsh() {
  const auto state = polarization::degraded_state(kPi, kC);
  const double s = measurement::chsh_max(state).s;
  const double analytic = std::sqrt(2.0) * (1.0 + kC);
  const double grid = chsh_grid_oracle(state.rho());
  const bool analytic_ok = std::abs(s - analytic) <= 1e-3;
  const bool band_ok = std::abs(s - 2.639) <= 0.048;
  const bool grid_ok = s >= grid - 1e-12 && s - grid <= 1e-3;
  const double horodecki = 2.0 * std::sqrt(1.0 + kC * kC);
  report(4, "CHSH", analytic_ok && band_ok && grid_ok,
         fmt("S_max %.5f: vs sqrt2(1+c) %.5f diff %.1e [%s]; in 2.639+-0.048 [%s]; grid oracle %.5f [%s]; "
             "2sqrt(1+c^2) = %.5f",
             s, analytic, std::abs(s - analytic), analytic_ok ? "ok" : "no", band_ok ? "ok" : "no", grid,
             grid_ok ? "ok" : "no", horodecki));
}

void visibility() {
  const auto grid = linspace(0.0, 180.0, 73);
  double worst = 0.0;
  for (const double c : {0.0, 0.5, kC, 1.0}) {
    const auto state = polarization::degraded_state(kPi, c);
    const double v0 = measurement::interference_curve(state, 0.0, grid).visibility;
    const double v45 = measurement::interference_curve(state, 45.0, grid).visibility;
    worst = std::max({worst, std::abs(v0 - 1.0), std::abs(v45 - c)});
  }
  report(5, "visibility contract", worst <= 1e-6,
         fmt("max |V(0)-1|, |V(45)-c| over c in {0,0.5,0.8709,1} = %.1e (tol 1e-6)", worst));
}

void fidelity() {
  const double f = tomography::fidelity(polarization::degraded_state(kPi, kC), polarization::phi_minus());
  // The quoted 0.9355 is (1 + c) / 2 = 0.93545 at four digits.
  const double analytic = 0.5 * (1.0 + kC);
  const bool exact = std::abs(f - analytic) <= 1e-6;
  const bool quoted = std::abs(f - 0.9355) <= 0.5e-4 + 1e-12;
  const bool bound = f >= 0.907 - 0.006;
  report(6, "fidelity chain", exact && quoted && bound,
         fmt("F %.7f vs (1+c)/2 %.7f (tol 1e-6), rounds to 0.9355, upper bound on measured 0.907+-0.006", f,
             analytic));
}

void tomography_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto truth = polarization::degraded_state(kPi, 0.88);
  int good = 0;
  bool psd = true;
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rec = tomography::tomo_simulate_counts(truth, 1e4, seed);
    const auto mle = tomography::tomo_mle_detailed(rec);
    Eigen::SelfAdjointEigenSolver<polarization::DensityMatrix> es(mle.rho, Eigen::EigenvaluesOnly);
    psd = psd && es.eigenvalues().minCoeff() >= -1e-12;
    const double f = tomography::uhlmann_fidelity(polarization::TwoPhotonState(mle.rho, 1e-9), truth);
    worst = std::min(worst, f);
    if (f >= 0.995) ++good;
  }
  const double elapsed = seconds_since(t0);
  report(7, "tomography recovery", good >= 95 && psd && elapsed < 60.0,
         fmt("%d/100 seeds with F >= 0.995 (min %.5f), PSD %s, %.2f s", good, worst, psd ? "always" : "violated",
             elapsed));
}

void monte_carlo() {
  const photostats::SourceRate src;  // 150 mW
  const photostats::DetectionChain chain;
  const biphoton::BiphotonParams bp{454.0, 462.0};
  constexpr std::uint64_t kSeed = 7;
  const auto a = photostats::simulate_timetags(src, bp, chain, 10.0, kSeed);
  const auto b = photostats::simulate_timetags(src, bp, chain, 10.0, kSeed);
  const bool reproducible = a.events == b.events;
  const auto m = photostats::car_from_stream(a, chain, 50.0, 10'000);
  const double model = photostats::car_model(photostats::pair_rate(src), chain);
  const bool pass = m.car > 6e3 && std::abs(m.car - model) <= 3.0 * m.car_sigma && reproducible;

  int seeds_ok = 0;
  for (std::uint64_t s = 100; s < 120; ++s) {
    const auto r = photostats::car_from_stream(photostats::simulate_timetags(src, bp, chain, 10.0, s), chain, 50.0,
                                               10'000);
    if (r.car > 6e3 && std::abs(r.car - model) <= 3.0 * r.car_sigma) ++seeds_ok;
  }
  report(8, "Monte Carlo CAR", pass,
         fmt("seed 7: CAR %.0f +- %.0f vs model %.0f (%.2f sigma), > 6000, reproducible %s; seeds 100-119 pass %d/20",
             m.car, m.car_sigma, model, std::abs(m.car - model) / m.car_sigma, reproducible ? "yes" : "no",
             seeds_ok));
}

void fit_exactness() {
  double worst = 0.0;
  {
    const auto x = linspace(-2000.0, 2000.0, 201);
    std::vector<double> y;
    for (double v : x) y.push_back(fitting::lorentzian(v, 35.0, 454.0, 1.0, 0.02));
    const auto fit = fitting::fit_lorentzian(x, y);
    worst = std::max({worst, rel(fit.value("center"), 35.0), rel(fit.value("fwhm"), 454.0),
                      rel(fit.value("amplitude"), 1.0), rel(fit.value("offset"), 0.02)});
  }
  {
    const auto t = linspace(-5.0, 5.0, 401);
    std::vector<double> y;
    for (double v : t) y.push_back(1000.0 * std::exp(-2.0 * kPi * 0.45798 * std::abs(v)) + 3.0);
    const auto fit = fitting::fit_exp_g2(t, y);
    worst = std::max({worst, rel(fit.value("amplitude"), 1000.0), rel(fit.value("gamma_mhz"), 457.98),
                      rel(fit.value("floor"), 3.0)});
  }
  {
    const photostats::DetectionChain chain;
    std::vector<double> powers, cars;
    for (int i = 0; i < 25; ++i) {
      powers.push_back(0.05 * std::pow(250.0 / 0.05, i / 24.0));
      cars.push_back(fitting::car_curve(powers.back(), 320.6, 100.0, chain));
    }
    const auto fit = fitting::fit_car_curve(powers, cars, chain);
    worst = std::max({worst, rel(fit.value("pair_rate_per_mw"), 320.6), rel(fit.value("dark_hz"), 100.0)});
  }

  const auto x = linspace(-1500.0, 1500.0, 200);
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<double> y;
    for (double v : x) y.push_back(fitting::lorentzian(v, 0.0, 384.0, 1.0, 0.0) + noise(rng));
    sum += fitting::fit_lorentzian(x, y).value("fwhm");
  }
  const double bias = rel(sum / 100.0, 384.0);
  report(9, "fit exactness", worst < 1e-4 && bias <= 0.01,
         fmt("worst noiseless relative error %.1e (tol 1e-4); Lorentzian FWHM bias at 5%% noise %.2f%% (tol 1%%)",
             worst, 100.0 * bias));
}

void g2_pipeline() {
  photostats::SourceRate src;
  src.power_mw = 75.0;
  const photostats::DetectionChain chain;  // 60 ps jitter, 25 ps bins
  const auto stream = photostats::simulate_timetags(src, {454.0, 462.0}, chain, 100.0, 7);
  const auto hist = photostats::coincidence_histogram(stream, 10.0, chain.bin_ps);
  const auto fit = fitting::fit_exp_g2(hist);
  const double t = fit.value("t_fwhm_ns");
  report(10, "g2 pipeline", fit.converged && t >= 0.483 && t <= 0.52,
         fmt("fitted T_FWHM %.4f +- %.4f ns in [0.483, 0.52] (measured 0.502 +- 0.022), %llu coincidences", t,
             fit.stderr_of("t_fwhm_ns"), static_cast<unsigned long long>(hist.total())));
}

void network_oracle() {
  const auto net = polarization::ElementNet::canonical();
  double worst = 0.0;
  for (int k = 0; k < 32; ++k) {
    const double theta = 2.0 * kPi * k / 32.0;
    const auto got = polarization::propagate_network(net, theta).rho();
    worst = std::max(worst, (got - polarization::degraded_state(theta, 1.0).rho()).norm());
  }
  report(11, "network oracle", worst < 1e-10, fmt("max Frobenius distance over 32 phases %.1e (tol 1e-10)", worst));
}

void bootstrap_scaling() {
  const auto truth = polarization::degraded_state(kPi, kC);
  const tomography::Statistic fid = [](const polarization::TwoPhotonState& s) {
    return tomography::fidelity(s, polarization::phi_minus());
  };
  const double s1 = tomography::bootstrap_errors(tomography::tomo_simulate_counts(truth, 1e4, 21), 500, fid, 22).std;
  const double s4 = tomography::bootstrap_errors(tomography::tomo_simulate_counts(truth, 4e4, 23), 500, fid, 24).std;
  const double ratio = s1 / s4;
  const bool halves = std::abs(ratio - 2.0) <= 0.4;

  // Noise-free counts sized so the bootstrapped sigma_S lands at 0.048.
  // sigma_S ~ 1/sqrt(n): a pilot at 1e4 and two rescalings fix n.
  const tomography::Statistic s_stat = [](const polarization::TwoPhotonState& s) {
    return measurement::chsh_S(s, measurement::BellSettings::canonical_phi_minus());
  };
  double n = 1e4, sigma = 0.0, s = 0.0;
  for (int step = 0; step < 3; ++step) {
    const auto rec = tomography::tomo_expected_counts(truth, n);
    sigma = tomography::bootstrap_errors(rec, 500, s_stat, 34).std;
    s = s_stat(tomography::tomo_mle(rec));
    if (step < 2) n = std::round(n * std::pow(sigma / 0.048, 2));
  }
  const double significance = (s - 2.0) / sigma;
  const bool thirteen = std::abs(significance - 13.0) <= 1.0;
  report(12, "bootstrap scaling", halves && thirteen,
         fmt("std ratio n/4n %.3f (2 +- 20%%); n = %.0f per setting: S %.3f +- %.3f, (S-2)/sigma = %.2f (13 +- 1)",
             ratio, n, s, sigma, significance));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  cluster_spacing();
  biphoton_fwhm();
  overlap();
  chsh();
  visibility();
  fidelity();
  tomography_recovery();
  monte_carlo();
  fit_exactness();
  g2_pipeline();
  network_oracle();
  bootstrap_scaling();
  std::printf("%d of 12 criteria failed, %.1f s\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
