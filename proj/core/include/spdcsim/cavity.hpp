#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spdcsim::cavity {

/// Speed of light in vacuum (m/s).
inline constexpr double kSpeedOfLight = 299'792'458.0;

enum class Polarization { H, V, HV };

const char* to_string(Polarization pol);

/// Thrown when the two combs share one FSR and never walk off each other.
class DegenerateVernier : public std::domain_error {
 public:
  DegenerateVernier() : std::domain_error("degenerate Vernier: infinite cluster spacing") {}
};

enum class EnvelopeShape { Gaussian, Sinc2 };

/// Monolithic crystal cavity. Frequencies carry their unit in the field name.
struct CavitySpec {
  std::string name;
  double fsr_h_ghz = 0.0;
  double fsr_v_ghz = 0.0;
  double fwhm_h_mhz = 0.0;
  double fwhm_v_mhz = 0.0;
  double degenerate_freq_thz = 0.0;
  double pm_fwhm_thz = 0.0;
  double length_mm = 0.0;
  double out_coupler_reflectivity = 0.0;
  double poling_period_um = 0.0;  // metadata
  EnvelopeShape envelope = EnvelopeShape::Gaussian;

  double fsr_ghz(Polarization pol) const;
  double fwhm_mhz(Polarization pol) const;

  /// Throws std::invalid_argument naming the first violated field.
  void validate() const;
};

CavitySpec ppktp0();
CavitySpec ppktp1();

struct Mode {
  int index = 0;
  double offset_ghz = 0.0;  // from the degeneracy frequency
  double linewidth_mhz = 0.0;
  Polarization pol = Polarization::H;
};

struct ModeComb {
  std::vector<Mode> modes;

  std::size_t size() const { return modes.size(); }
  bool empty() const { return modes.empty(); }

  /// CSV with header `index,offset_GHz,linewidth_MHz,pol`.
  std::string to_csv() const;
};

/// Airy transmission of a lossless Fabry-Perot at `detuning_ghz` from a resonance.
double airy_transmission(double detuning_ghz, double fsr_ghz, double fwhm_mhz);

/// Lorentzian approximation of a single cavity line, peak normalized to 1.
double lorentzian_line(double detuning_ghz, double fwhm_mhz);

/// Exact full width at half maximum of the Airy line (MHz).
double airy_fwhm_mhz(double fsr_ghz, double fwhm_mhz);

/// Comb of one polarization centered on degeneracy, restricted to +-span/2.
ModeComb build_mode_comb(const CavitySpec& spec, Polarization pol, double span_ghz);

double cluster_spacing(double fsr_s_ghz, double fsr_i_ghz);

/// |fsr_h - fsr_v| minus the mean linewidth, in GHz. Positive means one mode per cluster.
double single_mode_margin(const CavitySpec& spec);

ModeComb dwdm_select(const ModeComb& comb, double center_offset_ghz, double width_ghz);

double effective_index(double length_mm, double fsr_ghz);

/// Signal (H) mode at +offset paired with idler (V) mode at -offset.
struct ModePair {
  int h_index = 0;
  int v_index = 0;
  double offset_ghz = 0.0;
  double mismatch_ghz = 0.0;
};

/// H/V mode pairs inside +-span/2 whose energy-conserving offsets agree within
/// half the mean linewidth. These are the modes that can emit pairs.
std::vector<ModePair> resonant_pairs(const CavitySpec& spec, double span_ghz);

/// Cluster comb: cluster j sits at the Vernier coincidence j * cluster_spacing.
/// Modes are tagged Polarization::HV and carry the mean H/V linewidth.
ModeComb build_cluster_comb(const CavitySpec& spec, double span_ghz);

/// Phase-matching envelope at `offset_ghz`, normalized to 1 at degeneracy.
double phase_matching_envelope(double offset_ghz, double pm_fwhm_thz, EnvelopeShape shape);

}  // namespace spdcsim::cavity
