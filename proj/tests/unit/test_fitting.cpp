#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <random>

#include "spdcsim/biphoton.hpp"
#include "spdcsim/cavity.hpp"
#include "spdcsim/fitting.hpp"
#include "spdcsim/least_squares.hpp"

using namespace spdcsim::fitting;
using spdcsim::photostats::DetectionChain;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return v;
}

void check_result_invariants(const FitResult& fit) {
  CHECK(fit.residual_norm >= 0.0);
  if (!fit.converged) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
  CHECK((fit.covariance - fit.covariance.transpose()).norm() <= 1e-12 * fit.covariance.norm());
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stdev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<double> exp_model(const std::vector<double>& t, double amp, double gamma_mhz, double floor) {
  std::vector<double> y;
  for (double x : t) y.push_back(amp * std::exp(-2.0 * std::numbers::pi * gamma_mhz * 1e-3 * std::abs(x)) + floor);
  return y;
}

}  // namespace

TEST_CASE("numeric Jacobian matches analytic Lorentzian derivatives") {
  const auto x = linspace(-1000.0, 1000.0, 41);
  const Eigen::Vector4d p(12.0, 454.0, 2.0, 0.1);
  auto f = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(41);
    for (int i = 0; i < 41; ++i) r(i) = lorentzian(x[i], q(0), q(1), q(2), q(3));
    return r;
  };
  const Eigen::MatrixXd num = numeric_jacobian(f, p, Eigen::Vector4d(454.0, 454.0, 2.0, 2.0), 1e-6);
  for (int i = 0; i < 41; ++i) {
    const double d = x[i] - p(0), h = 0.5 * p(1), den = d * d + h * h;
    const double dcenter = p(2) * h * h * 2.0 * d / (den * den);
    const double dfwhm = p(2) * (h * d * d) / (den * den);
    const double damp = h * h / den;
    CHECK(num(i, 0) == doctest::Approx(dcenter).epsilon(1e-6).scale(1e-6));
    CHECK(num(i, 1) == doctest::Approx(dfwhm).epsilon(1e-6).scale(1e-6));
    CHECK(num(i, 2) == doctest::Approx(damp).epsilon(1e-8));
    CHECK(num(i, 3) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("Lorentzian fit on exact data") {
  const auto x = linspace(-2000.0, 2000.0, 201);
  std::vector<double> y;
  for (double v : x) y.push_back(lorentzian(v, 35.0, 454.0, 1.0, 0.02));
  const auto fit = fit_lorentzian(x, y);
  CHECK(fit.converged);
  CHECK(std::abs(fit.value("fwhm") - 454.0) / 454.0 < 1e-6);
  CHECK(fit.value("center") == doctest::Approx(35.0).epsilon(1e-6));
  CHECK(fit.value("amplitude") == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.value("offset") == doctest::Approx(0.02).epsilon(1e-6));
  check_result_invariants(fit);
  CHECK_THROWS_AS(fit.get("nope"), std::out_of_range);
}

TEST_CASE("Lorentzian fit with 5 percent noise is unbiased") {
  const auto x = linspace(-1500.0, 1500.0, 200);
  std::vector<double> widths, errors;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<double> y;
    for (double v : x) y.push_back(lorentzian(v, 0.0, 384.0, 1.0, 0.0) + noise(rng));
    const auto fit = fit_lorentzian(x, y);
    REQUIRE(fit.converged);
    check_result_invariants(fit);
    widths.push_back(fit.value("fwhm"));
    errors.push_back(fit.stderr_of("fwhm"));
  }
  CHECK(std::abs(mean(widths) - 384.0) / 384.0 <= 0.01);
  // Reported errors track the Monte Carlo scatter.
  const double ratio = mean(errors) / stdev(widths);
  CHECK(ratio > 1.0 / 1.5);
  CHECK(ratio < 1.5);
}

TEST_CASE("Lorentzian fit of an Airy sweep") {
  const auto x = linspace(-2000.0, 2000.0, 401);
  std::vector<double> y;
  for (double v : x) y.push_back(spdcsim::cavity::airy_transmission(v * 1e-3, 57.91, 454.0));
  const auto fit = fit_lorentzian(x, y);
  CHECK(fit.converged);
  const double airy = spdcsim::cavity::airy_fwhm_mhz(57.91, 454.0);
  CHECK(std::abs(fit.value("fwhm") - airy) / airy < 0.02);
}

TEST_CASE("Lorentzian fit is covariant under translation and scaling") {
  const auto x = linspace(-1500.0, 1500.0, 120);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> y;
  for (double v : x) y.push_back(lorentzian(v, 10.0, 420.0, 1.0, 0.05) + noise(rng));
  const auto base = fit_lorentzian(x, y);

  std::vector<double> xs, ys;
  for (double v : x) xs.push_back(v + 5000.0);
  for (double v : y) ys.push_back(v * 37.0);
  const auto moved = fit_lorentzian(xs, ys);
  CHECK(moved.converged);
  CHECK(moved.value("fwhm") == doctest::Approx(base.value("fwhm")).epsilon(1e-6));
  CHECK(moved.value("center") == doctest::Approx(base.value("center") + 5000.0).epsilon(1e-8));
  CHECK(moved.value("amplitude") == doctest::Approx(37.0 * base.value("amplitude")).epsilon(1e-6));
}

TEST_CASE("Lorentzian fit errors") {
  const auto x = linspace(-100.0, 100.0, 4);
  const std::vector<double> y(4, 1.0);
  CHECK_THROWS_AS(fit_lorentzian(x, y), std::invalid_argument);

  const auto narrow = linspace(-100.0, 100.0, 50);
  std::vector<double> yn;
  for (double v : narrow) yn.push_back(lorentzian(v, 0.0, 454.0, 1.0, 0.0));
  CHECK_THROWS_AS(fit_lorentzian(narrow, yn, LorentzianGuess{0.0, 454.0, 1.0, 0.0}), std::invalid_argument);

  // Constant data leave width and center unidentifiable.
  const auto xf = linspace(-1000.0, 1000.0, 50);
  const std::vector<double> flat(50, 0.3);
  const auto fit = fit_lorentzian(xf, flat, LorentzianGuess{0.0, 200.0, 0.0, 0.3});
  CHECK_FALSE(fit.converged);
  CHECK(fit.diagnostics.find("rank") != std::string::npos);
}

TEST_CASE("exponential g2 fit on exact data") {
  const auto t = linspace(-5.0, 5.0, 401);
  const auto y = exp_model(t, 1000.0, 457.98, 3.0);
  const auto fit = fit_exp_g2(t, y);
  CHECK(fit.converged);
  check_result_invariants(fit);
  CHECK(std::abs(fit.value("gamma_mhz") - 457.98) / 457.98 < 1e-4);
  CHECK(std::abs(fit.value("t_fwhm_ns") - 0.483) < 1e-4);
  CHECK(fit.value("t_fwhm_ns") == doctest::Approx(spdcsim::biphoton::t_fwhm({454.0, 462.0})).epsilon(1e-4));
  CHECK(fit.value("floor") == doctest::Approx(3.0).epsilon(1e-4));

  // Same fit through a histogram object.
  spdcsim::photostats::DelayHistogram hist;
  hist.bin_ps = 25;
  hist.half_bins = 200;
  for (std::size_t i = 0; i < 401; ++i) hist.counts.push_back(static_cast<std::uint64_t>(std::llround(1e9 * y[i])));
  CHECK(fit_exp_g2(hist).value("gamma_mhz") == doctest::Approx(457.98).epsilon(1e-4));
}

TEST_CASE("exponential g2 fit is covariant under scaling") {
  const auto t = linspace(-4.0, 4.0, 161);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 5.0);
  auto y = exp_model(t, 200.0, 400.0, 10.0);
  for (auto& v : y) v += noise(rng);
  const auto base = fit_exp_g2(t, y);
  for (auto& v : y) v *= 13.0;
  const auto scaled = fit_exp_g2(t, y);
  CHECK(scaled.value("gamma_mhz") == doctest::Approx(base.value("gamma_mhz")).epsilon(1e-6));
  CHECK(scaled.value("amplitude") == doctest::Approx(13.0 * base.value("amplitude")).epsilon(1e-6));
}

TEST_CASE("exponential g2 fit reports errors consistent with scatter") {
  const auto t = linspace(-4.0, 4.0, 161);
  std::vector<double> gammas, errors;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 4.0);
    auto y = exp_model(t, 100.0, 457.98, 20.0);
    for (auto& v : y) v += noise(rng);
    const auto fit = fit_exp_g2(t, y);
    REQUIRE(fit.converged);
    gammas.push_back(fit.value("gamma_mhz"));
    errors.push_back(fit.stderr_of("gamma_mhz"));
  }
  const double ratio = mean(errors) / stdev(gammas);
  CHECK(ratio > 1.0 / 1.5);
  CHECK(ratio < 1.5);
}

TEST_CASE("flat histogram does not converge") {
  const auto t = linspace(-5.0, 5.0, 101);
  const std::vector<double> flat(101, 40.0);
  CHECK_FALSE(fit_exp_g2(t, flat).converged);

  std::mt19937_64 rng(3);
  std::poisson_distribution<int> draw(40.0);
  std::vector<double> noisy;
  for (int i = 0; i < 101; ++i) noisy.push_back(draw(rng));
  const auto fit = fit_exp_g2(t, noisy);
  CHECK_FALSE(fit.converged);
  CHECK_FALSE(fit.diagnostics.empty());

  CHECK_THROWS_AS(fit_exp_g2(linspace(-1.0, 1.0, 19), std::vector<double>(19, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(fit_exp_g2(linspace(-1.0, 2.0, 40), std::vector<double>(40, 1.0)), std::invalid_argument);
}

TEST_CASE("g2 fit of a simulated jitter-free stream") {
  DetectionChain chain{1.0, 1.0, 0.0, 0.0, 3.2, 0.0, 25.0};
  const auto stream = spdcsim::photostats::simulate_timetags({1.0, 1.0, 1e5}, {454.0, 462.0}, chain, 10.0, 13);
  const auto fit = fit_exp_g2(spdcsim::photostats::coincidence_histogram(stream, 10.0, 25.0));
  CHECK(fit.converged);
  CHECK(std::abs(fit.value("gamma_mhz") - 457.98) < 3.0 * fit.stderr_of("gamma_mhz") + 1e-3 * 457.98);
}

TEST_CASE("jitter broadens the fitted correlation time as the convolution predicts") {
  const DetectionChain chain{0.5, 0.5, 100.0, 100.0, 3.2, 60.0, 25.0};
  const auto stream = spdcsim::photostats::simulate_timetags({0.7, 75.0, 458.0}, {454.0, 462.0}, chain, 10.0, 14);
  const auto fit = fit_exp_g2(spdcsim::photostats::coincidence_histogram(stream, 10.0, 25.0));
  REQUIRE(fit.converged);

  // Oracle: the two-sided exponential convolved with a 60 ps Gaussian on the
  // same bins, fitted noiselessly. That is the width the estimator converges to.
  const double g = 2.0 * std::numbers::pi * 457.98e-3;  // per ns
  const double sigma = 0.060;
  auto conv = [&](double t) {
    return oracle::simpson(
        [&](double u) { return std::exp(-g * std::abs(u)) * std::exp(-0.5 * std::pow((t - u) / sigma, 2)); },
        t - 8.0 * sigma - 6.0, t + 8.0 * sigma + 6.0, 1e-12);
  };
  const auto t = linspace(-5.0, 5.0, 401);
  std::vector<double> model;
  for (double x : t) model.push_back(1000.0 * conv(x) + 1.0);
  const auto reference = fit_exp_g2(t, model);
  REQUIRE(reference.converged);
  CHECK(reference.value("t_fwhm_ns") > spdcsim::biphoton::t_fwhm({454.0, 462.0}));
  // The raw half-maximum width of the rounded cusp is wider still.
  CHECK(oracle::numeric_fwhm(conv, 3.0) > reference.value("t_fwhm_ns"));
  CHECK(std::abs(fit.value("t_fwhm_ns") - reference.value("t_fwhm_ns")) / reference.value("t_fwhm_ns") < 0.10);
}

TEST_CASE("CAR curve fit on exact data") {
  const DetectionChain chain;
  const auto powers = logspace(0.05, 250.0, 25);
  std::vector<double> cars;
  for (double p : powers) cars.push_back(car_curve(p, 320.6, 100.0, chain));
  const auto fit = fit_car_curve(powers, cars, chain);
  CHECK(fit.converged);
  check_result_invariants(fit);
  CHECK(std::abs(fit.value("pair_rate_per_mw") - 320.6) / 320.6 < 1e-4);
  CHECK(std::abs(fit.value("dark_hz") - 100.0) / 100.0 < 1e-4);
  // Peak at R* = 800 pairs/s.
  CHECK(fit.value("peak_power_mw") == doctest::Approx(800.0 / 320.6).epsilon(1e-4));
  const double scan_peak = *std::max_element(cars.begin(), cars.end());
  CHECK(fit.value("peak_car") >= scan_peak);
  CHECK(fit.value("peak_car") == doctest::Approx(0.125 / (4.0 * 100.0 * 3.2e-9)).epsilon(1e-4));
}

TEST_CASE("CAR curve tuned above 3e4 at its peak") {
  const DetectionChain chain;
  const double dark = 300.0;
  const double target = 0.125 / (4.0 * dark * 3.2e-9);
  REQUIRE(target > 3e4);
  const auto powers = logspace(0.1, 250.0, 12);
  std::vector<double> cars;
  for (double p : powers) cars.push_back(car_curve(p, 320.6, dark, chain));
  const auto fit = fit_car_curve(powers, cars, chain);
  CHECK(std::abs(fit.value("peak_car") - target) / target < 0.02);
}

TEST_CASE("CAR curve fit with 10 percent noise") {
  const DetectionChain chain;
  const auto powers = logspace(0.1, 250.0, 15);
  const double truth = 0.125 / (4.0 * 100.0 * 3.2e-9);
  std::vector<double> darks, errors;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.10);
    std::vector<double> cars;
    for (double p : powers) cars.push_back(car_curve(p, 320.6, 100.0, chain) * (1.0 + noise(rng)));
    const auto fit = fit_car_curve(powers, cars, chain);
    REQUIRE(fit.converged);
    check_result_invariants(fit);
    CHECK(std::abs(fit.value("peak_car") - truth) / truth < 0.10);
    darks.push_back(fit.value("dark_hz"));
    errors.push_back(fit.stderr_of("dark_hz"));
  }
  const double ratio = mean(errors) / stdev(darks);
  CHECK(ratio > 1.0 / 1.5);
  CHECK(ratio < 1.5);
}

TEST_CASE("CAR curve fit errors") {
  const DetectionChain chain;
  const auto powers = logspace(0.1, 250.0, 6);
  CHECK_THROWS_AS(fit_car_curve(powers, std::vector<double>(6, 5000.0), chain), std::invalid_argument);
  CHECK_THROWS_AS(fit_car_curve(logspace(1, 10, 4), std::vector<double>{1, 2, 3, 4}, chain), std::invalid_argument);
  CHECK_THROWS_AS(fit_car_curve(powers, std::vector<double>{1, 2, -3, 4, 5, 6}, chain), std::invalid_argument);
}
