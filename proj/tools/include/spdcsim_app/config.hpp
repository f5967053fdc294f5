#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "spdcsim/cavity.hpp"
#include "spdcsim/photostats.hpp"
#include "spdcsim/polarization.hpp"

namespace spdcsim::app {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration. The message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DwdmConfig {
  double center_offset_ghz = 0.0;
  double width_ghz = 200.0;
};

struct CavityScanConfig {
  double mode_span_ghz = 400.0;
  double cluster_span_ghz = 6000.0;
};

struct SimulationConfig {
  double duration_s = 10.0;
  double histogram_range_ns = 10.0;
  double accidental_offset_ns = 50.0;
  int accidental_windows = 10'000;
  double g2_power_mw = 75.0;
  double g2_duration_s = 100.0;
};

struct CarScanConfig {
  double power_min_mw = 0.05;
  double power_max_mw = 250.0;
  int points = 40;
};

struct InterferenceConfig {
  int points = 73;  // 0..180 degrees in 2.5 degree steps
};

struct TomographyConfig {
  double n_per_setting = 1e4;
  int bootstrap_resamples = 500;
  double chsh_sigma_target = 0.048;  // counts are scaled to reach this sigma_S
};

struct Seeds {
  std::uint64_t simulate = 7;
  std::uint64_t tomography = 1;
  std::uint64_t bootstrap = 2;
};

/// Report tolerances. Relative ones are fractions of the reference value.
struct Tolerances {
  double cluster_spacing_rel = 0.01;
  double t_fwhm_rel = 0.005;
  double overlap_abs = 0.005;
  double chsh_abs = 0.048;
  double visibility_0_abs = 0.0003;
  double visibility_45_abs = 0.0072;
  double fidelity_abs = 0.006;
  double significance_abs = 1.0;
  double g2_fit_low_ns = 0.483;
  double g2_fit_high_ns = 0.52;
};

struct ExperimentConfig {
  cavity::CavitySpec ppktp0 = cavity::ppktp0();
  cavity::CavitySpec ppktp1 = cavity::ppktp1();
  photostats::SourceRate source;
  photostats::DetectionChain detection;
  double pump_phase_rad = 3.141592653589793;
  /// Coherence of the HH/VV superposition. Empty means use the spectral overlap.
  std::optional<double> coherence = 0.8709;
  DwdmConfig dwdm;
  CavityScanConfig cavity;
  SimulationConfig simulation;
  CarScanConfig car_scan;
  InterferenceConfig interference;
  TomographyConfig tomography;
  Seeds seeds;
  Tolerances tolerances;
  std::optional<polarization::ElementNet> network;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  double effective_coherence() const;
  polarization::ElementNet effective_network() const;
};

ExperimentConfig default_config();

/// Parses JSON text over the defaults. Missing keys keep their defaults,
/// unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const ExperimentConfig& config);

}  // namespace spdcsim::app
