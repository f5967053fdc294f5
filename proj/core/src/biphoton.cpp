#include "spdcsim/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdcsim::biphoton {

void BiphotonParams::validate() const {
  if (!(std::isfinite(gamma_s_mhz) && gamma_s_mhz > 0.0) ||
      !(std::isfinite(gamma_i_mhz) && gamma_i_mhz > 0.0)) {
    throw std::invalid_argument("biphoton linewidths must be positive");
  }
}

double gamma_prime(const BiphotonParams& p) {
  p.validate();
  return std::sqrt(p.gamma_s_mhz * p.gamma_i_mhz);
}

double g2_model(double t_ns, const BiphotonParams& p) {
  const double gamma_ghz = gamma_prime(p) * 1e-3;
  return std::exp(-2.0 * std::numbers::pi * gamma_ghz * std::abs(t_ns));
}

double t_fwhm(const BiphotonParams& p) {
  const double gamma_ghz = gamma_prime(p) * 1e-3;
  return kFwhmConstant / (2.0 * std::numbers::pi * gamma_ghz);
}

double spectral_overlap(const BiphotonParams& p0, const BiphotonParams& p1) {
  const double g0 = gamma_prime(p0);
  const double g1 = gamma_prime(p1);
  return std::min(g0, g1) / std::max(g0, g1);
}

}  // namespace spdcsim::biphoton
