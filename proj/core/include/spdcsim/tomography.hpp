#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdcsim/measurement.hpp"

namespace spdcsim::tomography {

using measurement::ProjectorSetting;
using polarization::DensityMatrix;
using polarization::StateVector;
using polarization::TwoPhotonState;

struct TomographyEntry {
  std::string label_a;  // "H", "V", "D", "A", "R", "L" or a linear angle in degrees
  std::string label_b;
  double seconds = 1.0;
  std::uint64_t counts = 0;

  ProjectorSetting setting() const;
};

/// Analyzer state for a label: one of H V D A R L, or a linear angle in degrees.
measurement::Jones analyzer_from_label(const std::string& label);

struct TomographyRecord {
  std::vector<TomographyEntry> entries;

  /// Exactly 16 entries with positive integration times.
  void validate() const;
  std::uint64_t total_counts() const;

  /// CSV with header `setting_a,setting_b,seconds,counts`.
  std::string to_csv() const;
  static TomographyRecord from_csv(const std::string& text);
};

/// The 16 settings {H,V,D,R} x {H,V,D,R}, counts zero.
TomographyRecord canonical_settings();

/// Poisson counts with means n_per_setting * seconds * <proj|rho|proj>.
TomographyRecord tomo_simulate_counts(const TwoPhotonState& state, double n_per_setting,
                                      std::uint64_t seed);

/// Expected (noise-free) counts rounded to the nearest integer.
TomographyRecord tomo_expected_counts(const TwoPhotonState& state, double n_per_setting);

class NotInformationallyComplete : public std::invalid_argument {
 public:
  NotInformationallyComplete() : std::invalid_argument("tomography settings are not informationally complete") {}
};

class MleNotConverged : public std::runtime_error {
 public:
  explicit MleNotConverged(const std::string& diagnostics)
      : std::runtime_error("MLE did not converge: " + diagnostics) {}
};

/// Unit-trace linear inversion. May have negative eigenvalues.
DensityMatrix tomo_linear(const TomographyRecord& rec);

struct MleOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 10'000;
};

struct MleResult {
  DensityMatrix rho;
  int iterations = 0;
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;  // per count, overall rate profiled out
};

/// Maximum-likelihood state rho = T^dagger T / tr(T^dagger T), T lower
/// triangular with a real diagonal.
MleResult tomo_mle_detailed(const TomographyRecord& rec, const MleOptions& options = {});
TwoPhotonState tomo_mle(const TomographyRecord& rec, const MleOptions& options = {});

/// <psi| rho |psi> for a normalized target.
double fidelity(const TwoPhotonState& state, const StateVector& target);

/// (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2
double uhlmann_fidelity(const TwoPhotonState& rho, const TwoPhotonState& sigma);

struct BootstrapSummary {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> samples;
};

using Statistic = std::function<double(const TwoPhotonState&)>;

/// Resamples every count as Poisson(observed), reconstructs by MLE, and
/// evaluates `statistic`. Resample r uses a seed derived from (seed, r), so
/// results do not depend on `threads`.
BootstrapSummary bootstrap_errors(const TomographyRecord& rec, int resamples, const Statistic& statistic,
                                  std::uint64_t seed, unsigned threads = 0);

}  // namespace spdcsim::tomography
