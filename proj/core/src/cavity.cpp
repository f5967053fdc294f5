#include "spdcsim/cavity.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace spdcsim::cavity {

namespace {

void require_positive_finite(double value, const char* what) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw std::domain_error(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

const char* to_string(Polarization pol) {
  switch (pol) {
    case Polarization::H: return "H";
    case Polarization::V: return "V";
    case Polarization::HV: return "HV";
  }
  return "?";
}

double CavitySpec::fsr_ghz(Polarization pol) const {
  switch (pol) {
    case Polarization::H: return fsr_h_ghz;
    case Polarization::V: return fsr_v_ghz;
    case Polarization::HV: break;
  }
  throw std::invalid_argument("joint polarization has no single FSR");
}

double CavitySpec::fwhm_mhz(Polarization pol) const {
  switch (pol) {
    case Polarization::H: return fwhm_h_mhz;
    case Polarization::V: return fwhm_v_mhz;
    case Polarization::HV: return 0.5 * (fwhm_h_mhz + fwhm_v_mhz);
  }
  return 0.0;
}

void CavitySpec::validate() const {
  auto check = [this](double v, const char* field) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument(name + ": " + field + " must be positive");
    }
  };
  check(fsr_h_ghz, "fsr_h_ghz");
  check(fsr_v_ghz, "fsr_v_ghz");
  check(fwhm_h_mhz, "fwhm_h_mhz");
  check(fwhm_v_mhz, "fwhm_v_mhz");
  check(degenerate_freq_thz, "degenerate_freq_thz");
  check(pm_fwhm_thz, "pm_fwhm_thz");
  check(length_mm, "length_mm");
  if (fwhm_h_mhz >= fsr_h_ghz * 1e3) {
    throw std::invalid_argument(name + ": fwhm_h_mhz must be below fsr_h_ghz");
  }
  if (fwhm_v_mhz >= fsr_v_ghz * 1e3) {
    throw std::invalid_argument(name + ": fwhm_v_mhz must be below fsr_v_ghz");
  }
  if (!(out_coupler_reflectivity > 0.0 && out_coupler_reflectivity < 1.0)) {
    throw std::invalid_argument(name + ": out_coupler_reflectivity must lie in (0,1)");
  }
}

namespace {

constexpr double kDegenerateFreqThz = kSpeedOfLight / 1550.2e-9 * 1e-12;

CavitySpec base_crystal(std::string name) {
  CavitySpec s;
  s.name = std::move(name);
  s.degenerate_freq_thz = kDegenerateFreqThz;
  s.pm_fwhm_thz = 2.04;
  s.length_mm = 1.47;
  s.out_coupler_reflectivity = 0.96;
  s.poling_period_um = 46.2;
  return s;
}

}  // namespace

CavitySpec ppktp0() {
  CavitySpec s = base_crystal("PPKTP0");
  s.fsr_h_ghz = 57.91;
  s.fsr_v_ghz = 54.91;
  s.fwhm_h_mhz = 454.0;
  s.fwhm_v_mhz = 462.0;
  return s;
}

CavitySpec ppktp1() {
  CavitySpec s = base_crystal("PPKTP1");
  s.fsr_h_ghz = 57.41;
  s.fsr_v_ghz = 54.91;
  s.fwhm_h_mhz = 422.0;
  s.fwhm_v_mhz = 384.0;
  return s;
}

std::string ModeComb::to_csv() const {
  std::ostringstream out;
  out.precision(12);
  out << "index,offset_GHz,linewidth_MHz,pol\n";
  for (const auto& m : modes) {
    out << m.index << ',' << m.offset_ghz << ',' << m.linewidth_mhz << ',' << to_string(m.pol) << '\n';
  }
  return out.str();
}

double airy_transmission(double detuning_ghz, double fsr_ghz, double fwhm_mhz) {
  if (!std::isfinite(detuning_ghz)) throw std::domain_error("detuning must be finite");
  require_positive_finite(fsr_ghz, "fsr");
  require_positive_finite(fwhm_mhz, "fwhm");
  if (fwhm_mhz >= fsr_ghz * 1e3) throw std::domain_error("fwhm must be below fsr");

  const double finesse = fsr_ghz * 1e3 / fwhm_mhz;
  const double coeff = 2.0 * finesse / std::numbers::pi;
  const double s = std::sin(std::numbers::pi * detuning_ghz / fsr_ghz);
  return 1.0 / (1.0 + coeff * coeff * s * s);
}

double lorentzian_line(double detuning_ghz, double fwhm_mhz) {
  require_positive_finite(fwhm_mhz, "fwhm");
  const double half = 0.5 * fwhm_mhz * 1e-3;
  return half * half / (detuning_ghz * detuning_ghz + half * half);
}

double airy_fwhm_mhz(double fsr_ghz, double fwhm_mhz) {
  require_positive_finite(fsr_ghz, "fsr");
  require_positive_finite(fwhm_mhz, "fwhm");
  const double finesse = fsr_ghz * 1e3 / fwhm_mhz;
  const double arg = std::numbers::pi / (2.0 * finesse);
  if (arg >= 1.0) throw std::domain_error("finesse too low for a resolved half maximum");
  return 2.0 * fsr_ghz * 1e3 / std::numbers::pi * std::asin(arg);
}

ModeComb build_mode_comb(const CavitySpec& spec, Polarization pol, double span_ghz) {
  if (!(span_ghz > 0.0)) throw std::domain_error("span must be positive");
  const double fsr = spec.fsr_ghz(pol);
  const int half_count = static_cast<int>(std::floor(span_ghz / (2.0 * fsr)));

  ModeComb comb;
  comb.modes.reserve(static_cast<std::size_t>(2 * half_count + 1));
  for (int k = -half_count; k <= half_count; ++k) {
    comb.modes.push_back({k, k * fsr, spec.fwhm_mhz(pol), pol});
  }
  return comb;
}

double cluster_spacing(double fsr_s_ghz, double fsr_i_ghz) {
  require_positive_finite(fsr_s_ghz, "fsr_s");
  require_positive_finite(fsr_i_ghz, "fsr_i");
  if (fsr_s_ghz == fsr_i_ghz) throw DegenerateVernier();
  return fsr_s_ghz * fsr_i_ghz / std::abs(fsr_s_ghz - fsr_i_ghz);
}

double single_mode_margin(const CavitySpec& spec) {
  const double mean_bw_ghz = 0.5 * (spec.fwhm_h_mhz + spec.fwhm_v_mhz) * 1e-3;
  return std::abs(spec.fsr_h_ghz - spec.fsr_v_ghz) - mean_bw_ghz;
}

ModeComb dwdm_select(const ModeComb& comb, double center_offset_ghz, double width_ghz) {
  if (!(width_ghz > 0.0)) throw std::domain_error("DWDM width must be positive");
  ModeComb out;
  for (const auto& m : comb.modes) {
    if (std::abs(m.offset_ghz - center_offset_ghz) <= 0.5 * width_ghz) out.modes.push_back(m);
  }
  return out;
}

double effective_index(double length_mm, double fsr_ghz) {
  require_positive_finite(length_mm, "length");
  require_positive_finite(fsr_ghz, "fsr");
  return kSpeedOfLight / (2.0 * length_mm * 1e-3 * fsr_ghz * 1e9);
}

std::vector<ModePair> resonant_pairs(const CavitySpec& spec, double span_ghz) {
  if (!(span_ghz > 0.0)) throw std::domain_error("span must be positive");
  const double tolerance = 0.25 * (spec.fwhm_h_mhz + spec.fwhm_v_mhz) * 1e-3;
  const int half_count = static_cast<int>(std::floor(span_ghz / (2.0 * spec.fsr_h_ghz)));

  std::vector<ModePair> pairs;
  for (int k = -half_count; k <= half_count; ++k) {
    const double h_offset = k * spec.fsr_h_ghz;
    // Energy conservation puts the idler at -h_offset; V mode -m sits there.
    const int m = static_cast<int>(std::lround(h_offset / spec.fsr_v_ghz));
    const double v_offset = m * spec.fsr_v_ghz;
    if (std::abs(v_offset) > 0.5 * span_ghz) continue;
    const double mismatch = h_offset - v_offset;
    if (std::abs(mismatch) <= tolerance) {
      pairs.push_back({k, -m, 0.5 * (h_offset + v_offset), mismatch});
    }
  }
  return pairs;
}

ModeComb build_cluster_comb(const CavitySpec& spec, double span_ghz) {
  if (!(span_ghz > 0.0)) throw std::domain_error("span must be positive");
  const double spacing = cluster_spacing(spec.fsr_h_ghz, spec.fsr_v_ghz);
  const int half_count = static_cast<int>(std::floor(span_ghz / (2.0 * spacing)));

  ModeComb comb;
  for (int j = -half_count; j <= half_count; ++j) {
    comb.modes.push_back({j, j * spacing, spec.fwhm_mhz(Polarization::HV), Polarization::HV});
  }
  return comb;
}

double phase_matching_envelope(double offset_ghz, double pm_fwhm_thz, EnvelopeShape shape) {
  require_positive_finite(pm_fwhm_thz, "pm_fwhm");
  const double x = offset_ghz / (pm_fwhm_thz * 1e3);  // in units of the FWHM
  switch (shape) {
    case EnvelopeShape::Gaussian:
      return std::exp(-4.0 * std::numbers::ln2 * x * x);
    case EnvelopeShape::Sinc2: {
      // sinc^2(u) = 1/2 at u = 1.3915573
      const double u = 2.0 * 1.3915573315 * x;
      if (u == 0.0) return 1.0;
      const double s = std::sin(u) / u;
      return s * s;
    }
  }
  return 0.0;
}

}  // namespace spdcsim::cavity
