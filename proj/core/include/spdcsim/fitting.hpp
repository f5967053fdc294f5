#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spdcsim/photostats.hpp"

namespace spdcsim::fitting {

struct Parameter {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
};

struct FitResult {
  std::vector<Parameter> parameters;  // fitted, in covariance order
  std::vector<Parameter> derived;     // functions of the fitted ones
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string diagnostics;

  /// Looks up a fitted or derived quantity; throws std::out_of_range.
  const Parameter& get(const std::string& name) const;
  double value(const std::string& name) const { return get(name).value; }
  double stderr_of(const std::string& name) const { return get(name).stderr_; }
};

struct LorentzianGuess {
  double center = 0.0;
  double fwhm = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
};

/// y = A (G/2)^2 / ((x - x0)^2 + (G/2)^2) + B.
/// Parameters: "center", "fwhm", "amplitude", "offset" (x and y units of the input).
FitResult fit_lorentzian(std::span<const double> x, std::span<const double> y,
                         std::optional<LorentzianGuess> guess = std::nullopt);

double lorentzian(double x, double center, double fwhm, double amplitude, double offset);

/// Fits amplitude * exp(-2 pi gamma |t|) + floor. Parameters "amplitude",
/// "gamma_mhz", "floor"; derived "t_fwhm_ns" = 1.39 / (2 pi gamma).
FitResult fit_exp_g2(std::span<const double> t_ns, std::span<const double> counts);
FitResult fit_exp_g2(const photostats::DelayHistogram& hist);

/// Fits car_model(g * P) to (power, CAR) points with the efficiencies and
/// window of `chain`. Both arms share one dark rate. Parameters
/// "pair_rate_per_mw", "dark_hz"; derived "peak_car", "peak_power_mw".
FitResult fit_car_curve(std::span<const double> powers_mw, std::span<const double> cars,
                        const photostats::DetectionChain& chain);

/// car_model for a shared dark rate, as a function of pump power.
double car_curve(double power_mw, double pair_rate_per_mw, double dark_hz, const photostats::DetectionChain& chain);

}  // namespace spdcsim::fitting
