#include "spdcsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spdcsim/biphoton.hpp"
#include "spdcsim/least_squares.hpp"

namespace spdcsim::fitting {

const Parameter& FitResult::get(const std::string& name) const {
  for (const auto& p : parameters)
    if (p.name == name) return p;
  for (const auto& p : derived)
    if (p.name == name) return p;
  throw std::out_of_range("no fit parameter named " + name);
}

namespace {

void require_samples(std::span<const double> x, std::span<const double> y, std::size_t minimum) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y sample counts differ");
  if (x.size() < minimum) {
    throw std::invalid_argument("need at least " + std::to_string(minimum) + " samples");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("non-finite sample");
  }
}

Eigen::VectorXd stderrs(const Eigen::MatrixXd& cov) {
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

// Full width of the region above half maximum, from the samples themselves.
double half_max_width(std::span<const double> x, std::span<const double> y, double base, double peak) {
  const double half = base + 0.5 * (peak - base);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] >= half) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
    }
  }
  return hi - lo;
}

}  // namespace

double lorentzian(double x, double center, double fwhm, double amplitude, double offset) {
  const double h2 = 0.25 * fwhm * fwhm;
  const double d = x - center;
  return amplitude * h2 / (d * d + h2) + offset;
}

FitResult fit_lorentzian(std::span<const double> x, std::span<const double> y, std::optional<LorentzianGuess> guess) {
  require_samples(x, y, 5);
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());

  LorentzianGuess g;
  if (guess) {
    g = *guess;
  } else {
    g.center = x[static_cast<std::size_t>(ymax - y.begin())];
    g.offset = *ymin;
    g.amplitude = *ymax - *ymin;
    g.fwhm = half_max_width(x, y, *ymin, *ymax);
    // Sparse sampling can leave a single point above half maximum.
    if (!(g.fwhm > 0.0)) g.fwhm = 0.1 * (*xmax - *xmin);
  }
  if (*xmax - *xmin < 2.0 * std::abs(g.fwhm)) {
    throw std::invalid_argument("samples must span at least two linewidths");
  }

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = lorentzian(x[i], p(0), p(1), p(2), p(3)) - y[i];
    }
    return r;
  };

  Eigen::VectorXd p0(4);
  p0 << g.center, g.fwhm, g.amplitude, g.offset;
  LmOptions options;
  const double yscale = std::max({std::abs(g.amplitude), std::abs(g.offset), 1e-300});
  options.typical_scale = Eigen::Vector4d(std::abs(g.fwhm), std::abs(g.fwhm), yscale, yscale);
  const LmResult lm = levenberg_marquardt(residuals, p0, options);

  FitResult fit;
  fit.covariance = lm_covariance(lm, static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd se = stderrs(fit.covariance);
  fit.parameters = {{"center", lm.params(0), se(0)},
                    {"fwhm", std::abs(lm.params(1)), se(1)},
                    {"amplitude", lm.params(2), se(2)},
                    {"offset", lm.params(3), se(3)}};
  fit.residual_norm = std::sqrt(2.0 * lm.cost);
  fit.converged = lm.converged;
  fit.iterations = lm.iterations;
  fit.diagnostics = lm.message;
  return fit;
}

FitResult fit_exp_g2(std::span<const double> t_ns, std::span<const double> counts) {
  require_samples(t_ns, counts, 20);
  const auto [tmin, tmax] = std::minmax_element(t_ns.begin(), t_ns.end());
  const double span = *tmax - *tmin;
  if (!(span > 0.0) || std::abs(*tmin + *tmax) > 1e-6 * span) {
    throw std::invalid_argument("g2 histogram must cover a symmetric delay range");
  }
  const auto [cmin, cmax] = std::minmax_element(counts.begin(), counts.end());

  const double two_pi = 2.0 * std::numbers::pi;
  double amplitude = *cmax - *cmin;
  double width = half_max_width(t_ns, counts, *cmin, *cmax);
  if (!(width > 0.0)) width = span / static_cast<double>(t_ns.size());
  const double gamma0 = 2.0 * std::numbers::ln2 / (two_pi * width);

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(t_ns.size()));
    for (std::size_t i = 0; i < t_ns.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = p(0) * std::exp(-two_pi * p(1) * std::abs(t_ns[i])) + p(2) - counts[i];
    }
    return r;
  };

  Eigen::VectorXd p0(3);
  p0 << amplitude, gamma0, *cmin;
  LmOptions options;
  const double yscale = std::max({std::abs(amplitude), std::abs(*cmin), 1.0});
  options.typical_scale = Eigen::Vector3d(yscale, gamma0, yscale);
  const LmResult lm = levenberg_marquardt(residuals, p0, options);

  FitResult fit;
  fit.covariance = lm_covariance(lm, static_cast<Eigen::Index>(t_ns.size()));
  // Report gamma in MHz.
  fit.covariance.row(1) *= 1e3;
  fit.covariance.col(1) *= 1e3;
  const Eigen::VectorXd se = stderrs(fit.covariance);
  const double gamma_mhz = lm.params(1) * 1e3;
  fit.parameters = {{"amplitude", lm.params(0), se(0)}, {"gamma_mhz", gamma_mhz, se(1)}, {"floor", lm.params(2), se(2)}};
  fit.residual_norm = std::sqrt(2.0 * lm.cost);
  fit.iterations = lm.iterations;
  fit.diagnostics = lm.message;
  fit.converged = lm.converged;

  const double t_fwhm = biphoton::kFwhmConstant / (two_pi * gamma_mhz * 1e-3);
  fit.derived = {{"t_fwhm_ns", t_fwhm, gamma_mhz > 0.0 ? t_fwhm * se(1) / gamma_mhz : INFINITY}};
  if (fit.converged && !(gamma_mhz > 0.0 && lm.params(0) > 0.0)) {
    fit.converged = false;
    fit.diagnostics = "no decay: non-positive amplitude or rate";
  } else if (fit.converged && se(1) > 0.5 * gamma_mhz) {
    fit.converged = false;
    fit.diagnostics = "no decay: rate not resolved";
  }
  return fit;
}

FitResult fit_exp_g2(const photostats::DelayHistogram& hist) {
  std::vector<double> t(hist.counts.size());
  std::vector<double> y(hist.counts.size());
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    t[i] = hist.center_ps(i) * 1e-3;
    y[i] = static_cast<double>(hist.counts[i]);
  }
  return fit_exp_g2(t, y);
}

double car_curve(double power_mw, double pair_rate_per_mw, double dark_hz, const photostats::DetectionChain& chain) {
  photostats::DetectionChain c = chain;
  c.dark_s_hz = dark_hz;
  c.dark_i_hz = dark_hz;
  return photostats::car_model(pair_rate_per_mw * power_mw, c);
}

FitResult fit_car_curve(std::span<const double> powers_mw, std::span<const double> cars,
                        const photostats::DetectionChain& chain) {
  require_samples(powers_mw, cars, 5);
  chain.validate();
  for (std::size_t i = 0; i < cars.size(); ++i) {
    if (!(cars[i] > 0.0) || !(powers_mw[i] > 0.0)) throw std::invalid_argument("powers and CARs must be positive");
  }
  const auto [cmin, cmax] = std::minmax_element(cars.begin(), cars.end());
  if (*cmax - *cmin <= 1e-12 * *cmax) throw std::invalid_argument("degenerate CAR curve: all values equal");

  const double eta = std::sqrt(chain.eta_s * chain.eta_i);
  const double window_s = chain.window_ns * 1e-9;
  // Symmetric peak: CAR* = eta / (4 d window) at R* = d / eta.
  const std::size_t peak = static_cast<std::size_t>(cmax - cars.begin());
  const double dark0 = eta / (4.0 * window_s * *cmax);
  const double rate0 = dark0 / eta / powers_mw[peak];

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(cars.size()));
    const double g = std::exp(p(0));
    const double d = std::exp(p(1));
    for (std::size_t i = 0; i < cars.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = std::log(car_curve(powers_mw[i], g, d, chain)) - std::log(cars[i]);
    }
    return r;
  };

  Eigen::VectorXd p0(2);
  p0 << std::log(rate0), std::log(dark0);
  LmOptions options;
  options.typical_scale = Eigen::Vector2d(1.0, 1.0);
  const LmResult lm = levenberg_marquardt(residuals, p0, options);

  const double g = std::exp(lm.params(0));
  const double d = std::exp(lm.params(1));
  const Eigen::MatrixXd log_cov = lm_covariance(lm, static_cast<Eigen::Index>(cars.size()));
  const Eigen::Vector2d jac(g, d);
  FitResult fit;
  fit.covariance = jac.asDiagonal() * log_cov * jac.asDiagonal();
  const Eigen::VectorXd se = stderrs(fit.covariance);
  fit.parameters = {{"pair_rate_per_mw", g, se(0)}, {"dark_hz", d, se(1)}};

  const double peak_rate = d / eta;
  const double peak_car = car_curve(peak_rate / g, g, d, chain);
  const double var_ln_power = log_cov(0, 0) + log_cov(1, 1) - 2.0 * log_cov(0, 1);
  fit.derived = {{"peak_car", peak_car, peak_car * std::sqrt(std::max(0.0, log_cov(1, 1)))},
                 {"peak_power_mw", peak_rate / g, peak_rate / g * std::sqrt(std::max(0.0, var_ln_power))}};
  fit.residual_norm = std::sqrt(2.0 * lm.cost);
  fit.converged = lm.converged;
  fit.iterations = lm.iterations;
  fit.diagnostics = lm.message;
  return fit;
}

}  // namespace spdcsim::fitting
