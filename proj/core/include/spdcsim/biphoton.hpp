#pragma once

namespace spdcsim::biphoton {

/// Signal and idler Lorentzian linewidths (FWHM, MHz) of one single-mode cluster.
struct BiphotonParams {
  double gamma_s_mhz = 0.0;
  double gamma_i_mhz = 0.0;

  void validate() const;
};

/// Geometric mean of the two linewidths, MHz.
double gamma_prime(const BiphotonParams& p);

/// Normalized cross-correlation envelope exp(-2 pi gamma' |t|), t in ns.
double g2_model(double t_ns, const BiphotonParams& p);

/// Correlation time 1.39 / (2 pi gamma') in ns.
double t_fwhm(const BiphotonParams& p);

/// Prefactor of t_fwhm; 2 ln 2 rounded to three digits.
inline constexpr double kFwhmConstant = 1.39;

/// Ratio of the smaller to the larger gamma'. Lies in (0, 1].
double spectral_overlap(const BiphotonParams& p0, const BiphotonParams& p1);

}  // namespace spdcsim::biphoton
