#pragma once

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace spdcsim::polarization {

using Complex = std::complex<double>;
using Jones = Eigen::Vector2cd;
using JonesMatrix = Eigen::Matrix2cd;
using StateVector = Eigen::Vector4cd;
using DensityMatrix = Eigen::Matrix4cd;

/// Two-photon polarization state over the ordered basis {HH, HV, VH, VV}.
/// The first qubit is the signal arm, the second the idler arm.
class TwoPhotonState {
 public:
  /// Validates hermiticity, unit trace (1e-12 by default) and PSD (min eig >= -1e-9).
  explicit TwoPhotonState(const DensityMatrix& rho, double tolerance = 1e-12);

  static TwoPhotonState pure(const StateVector& psi);

  const DensityMatrix& rho() const { return rho_; }
  double min_eigenvalue() const;
  double purity() const;

 private:
  DensityMatrix rho_;
};

/// (|HH> + e^{i theta}|VV>) / sqrt(2)
StateVector bell_phi(double theta);
StateVector phi_plus();
StateVector phi_minus();

JonesMatrix hwp_matrix(double theta_deg);
JonesMatrix qwp_matrix(double theta_deg);

/// rho = (|HH><HH| + |VV><VV|)/2 + (c/2)(e^{-i theta}|HH><VV| + h.c.)
TwoPhotonState degraded_state(double theta, double c);

/// Wootters concurrence.
double concurrence(const TwoPhotonState& state);

// ---------------------------------------------------------------------------
// Path-polarization network
// ---------------------------------------------------------------------------

/// Transverse beam position in units of the beam-displacer walk-off (4 mm).
struct Position {
  int x = 0;
  int y = 0;
  auto operator<=>(const Position&) const = default;
};

enum class Pol { H = 0, V = 1 };

struct PathMode {
  Position pos;
  Pol pol = Pol::H;
  auto operator<=>(const PathMode&) const = default;
};

/// Single-beam state over (path, polarization) modes.
struct PathPolState {
  std::map<PathMode, Complex> amplitudes;

  double norm_squared() const;
};

inline constexpr double kBeamDisplacementMm = 4.0;

enum class Axis { X, Y };

/// Passes H straight and walks V by `direction` grid steps along `axis`.
struct BeamDisplacer {
  std::string label;
  Axis axis = Axis::X;
  int direction = 1;
  double displacement_mm = kBeamDisplacementMm;
};

/// Wave plate on one path, or on every path when `path` is empty.
struct HalfWavePlate {
  std::string label;
  double angle_deg = 0.0;
  std::optional<Position> path;
};

struct QuarterWavePlate {
  std::string label;
  double angle_deg = 0.0;
  std::optional<Position> path;
};

/// Moves a beam from one path to another without touching polarization.
struct Mirror {
  std::string label;
  Position from;
  Position to;
};

/// Type-II source: an H pump on `path` becomes a signal H / idler V pair there.
struct CrystalSource {
  std::string label;
  Position path;
};

using Element = std::variant<BeamDisplacer, HalfWavePlate, QuarterWavePlate, Mirror, CrystalSource>;

std::string element_label(const Element& e);

struct ElementNet {
  std::vector<Element> elements;

  /// Throws std::invalid_argument for a malformed network.
  void validate() const;

  /// BD1 -> HWP (pump V->H) -> two crystals -> BD2 -> relabeling HWPs -> BD3.
  static ElementNet canonical();

  /// Copy without the elements carrying `label`.
  ElementNet without(const std::string& label) const;
};

class NonInterferingNetwork : public std::runtime_error {
 public:
  explicit NonInterferingNetwork(const std::string& detail)
      : std::runtime_error("non-interfering network: " + detail) {}
};

/// Pump state (|H> + e^{i phase}|V>)/sqrt(2) on path (0,0) at the network input.
PathPolState pump_input(double pump_phase);

/// Traces the pump and both photons of each pair through `net`.
TwoPhotonState propagate_network(const ElementNet& net, double pump_phase);

}  // namespace spdcsim::polarization
