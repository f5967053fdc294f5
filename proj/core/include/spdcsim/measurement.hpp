#pragma once

#include <span>
#include <vector>

#include "spdcsim/polarization.hpp"

namespace spdcsim::measurement {

using polarization::Jones;
using polarization::TwoPhotonState;

/// Linear analyzer transmitting polarization at `angle_deg` from H.
Jones linear_analyzer(double angle_deg);

/// Analyzer states of the canonical tomography set.
Jones analyzer_h();
Jones analyzer_v();
Jones analyzer_d();
Jones analyzer_r();  // (|H> - i|V>)/sqrt(2)

/// Pair of single-photon projectors, one per arm. Both are normalized on construction.
class ProjectorSetting {
 public:
  ProjectorSetting(const Jones& arm0, const Jones& arm1);
  static ProjectorSetting linear(double alpha_deg, double beta_deg);

  const Jones& arm0() const { return arm0_; }
  const Jones& arm1() const { return arm1_; }
  /// Two-photon analyzer state |arm0> (x) |arm1>.
  polarization::StateVector ket() const;

 private:
  Jones arm0_;
  Jones arm1_;
};

/// Born-rule coincidence probability <a,b| rho |a,b>.
double coincidence_prob(const TwoPhotonState& state, const ProjectorSetting& setting);

struct InterferenceCurve {
  std::vector<double> beta_deg;
  std::vector<double> probability;
  double offset = 0.0;     // fitted a0 in a0 + a1 cos 2b + b1 sin 2b
  double amplitude = 0.0;  // sqrt(a1^2 + b1^2)
  double visibility = 0.0;
  bool degenerate = false;  // constant curve, visibility forced to 0
};

/// Coincidence fringe with arm 0 fixed at `alpha_deg` and arm 1 scanned over
/// `beta_grid_deg`. Visibility comes from a least-squares sinusoid fit.
InterferenceCurve interference_curve(const TwoPhotonState& state, double alpha_deg,
                                     std::span<const double> beta_grid_deg);

/// Polarization correlation from the four coincidence probabilities.
double correlation_E(const TwoPhotonState& state, double a_deg, double b_deg);

struct BellSettings {
  double a = 0.0;
  double a_prime = 45.0;
  double b = -22.5;
  double b_prime = -67.5;

  /// Settings reaching 2 sqrt(2) on |Phi->.
  static BellSettings canonical_phi_minus() { return {}; }
};

double chsh_S(const TwoPhotonState& state, const BellSettings& settings);

struct ChshResult {
  double s = 0.0;
  BellSettings settings;
};

/// Exhaustive 0.5-degree grid over all four analyzer angles, then a compass
/// search down to 0.01 degree.
ChshResult chsh_max(const TwoPhotonState& state);

}  // namespace spdcsim::measurement
