#include "spdcsim/polarization.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

namespace spdcsim::polarization {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr Complex kI{0.0, 1.0};

}  // namespace

TwoPhotonState::TwoPhotonState(const DensityMatrix& rho, double tolerance) : rho_(rho) {
  if (!rho.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tolerance) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  if (std::abs(rho.trace() - Complex(1.0)) > tolerance) {
    throw std::invalid_argument("density matrix trace differs from 1");
  }
  if (min_eigenvalue() < -1e-9) throw std::invalid_argument("density matrix is not positive semidefinite");
}

TwoPhotonState TwoPhotonState::pure(const StateVector& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw std::invalid_argument("zero state vector");
  const StateVector u = psi / n;
  DensityMatrix rho = u * u.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return TwoPhotonState(rho);
}

double TwoPhotonState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double TwoPhotonState::purity() const { return (rho_ * rho_).trace().real(); }

StateVector bell_phi(double theta) {
  StateVector psi = StateVector::Zero();
  psi(0) = 1.0 / std::numbers::sqrt2;
  psi(3) = std::exp(kI * theta) / std::numbers::sqrt2;
  return psi;
}

StateVector phi_plus() { return bell_phi(0.0); }
StateVector phi_minus() { return bell_phi(std::numbers::pi); }

JonesMatrix hwp_matrix(double theta_deg) {
  if (!std::isfinite(theta_deg)) throw std::domain_error("wave-plate angle must be finite");
  const double c = std::cos(2.0 * theta_deg * kDeg);
  const double s = std::sin(2.0 * theta_deg * kDeg);
  JonesMatrix m;
  m << c, s, s, -c;
  return m;
}

JonesMatrix qwp_matrix(double theta_deg) {
  if (!std::isfinite(theta_deg)) throw std::domain_error("wave-plate angle must be finite");
  const double c = std::cos(theta_deg * kDeg);
  const double s = std::sin(theta_deg * kDeg);
  JonesMatrix m;
  m << c * c + kI * s * s, (1.0 - kI) * s * c, (1.0 - kI) * s * c, s * s + kI * c * c;
  return m;
}

TwoPhotonState degraded_state(double theta, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::domain_error("coherence must lie in [0,1]");
  DensityMatrix rho = DensityMatrix::Zero();
  rho(0, 0) = 0.5;
  rho(3, 3) = 0.5;
  rho(0, 3) = 0.5 * c * std::exp(-kI * theta);
  rho(3, 0) = std::conj(rho(0, 3));
  return TwoPhotonState(rho);
}

double concurrence(const TwoPhotonState& state) {
  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const DensityMatrix& rho = state.rho();
  const DensityMatrix flipped = yy * rho.conjugate() * yy;

  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho);
  const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const DensityMatrix sqrt_rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  DensityMatrix inner = sqrt_rho * flipped * sqrt_rho;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es2(inner, Eigen::EigenvaluesOnly);
  // Round-off zeros (~1e-17) would otherwise survive the square root as ~1e-9.
  Eigen::Vector4d lambda = es2.eigenvalues().unaryExpr([](double v) { return v < 1e-15 ? 0.0 : v; }).cwiseSqrt();
  std::sort(lambda.data(), lambda.data() + 4, std::greater<>());
  return std::max(0.0, lambda(0) - lambda(1) - lambda(2) - lambda(3));
}

double PathPolState::norm_squared() const {
  double sum = 0.0;
  for (const auto& [mode, amp] : amplitudes) sum += std::norm(amp);
  return sum;
}

std::string element_label(const Element& e) {
  return std::visit([](const auto& el) { return el.label; }, e);
}

void ElementNet::validate() const {
  bool seen_crystal = false;
  bool crystals_closed = false;
  std::set<Position> crystal_paths;
  for (const auto& e : elements) {
    if (const auto* c = std::get_if<CrystalSource>(&e)) {
      if (crystals_closed) throw std::invalid_argument("crystal sources must form one contiguous stage");
      if (!crystal_paths.insert(c->path).second) {
        throw std::invalid_argument("two crystal sources share a path");
      }
      seen_crystal = true;
      continue;
    }
    if (seen_crystal) crystals_closed = true;
    if (const auto* bd = std::get_if<BeamDisplacer>(&e)) {
      if (std::abs(bd->displacement_mm - kBeamDisplacementMm) > 1e-12) {
        throw std::invalid_argument("beam displacement is fixed at 4 mm");
      }
      if (bd->direction != 1 && bd->direction != -1) {
        throw std::invalid_argument("beam-displacer direction must be +1 or -1");
      }
    } else if (const auto* h = std::get_if<HalfWavePlate>(&e)) {
      if (!std::isfinite(h->angle_deg)) throw std::invalid_argument("wave-plate angle must be finite");
    } else if (const auto* q = std::get_if<QuarterWavePlate>(&e)) {
      if (!std::isfinite(q->angle_deg)) throw std::invalid_argument("wave-plate angle must be finite");
    }
  }
  if (!seen_crystal) throw std::invalid_argument("network has no crystal source");
}

ElementNet ElementNet::canonical() {
  ElementNet net;
  net.elements = {
      BeamDisplacer{"BD1", Axis::X, +1},
      HalfWavePlate{"HWP-pump", 45.0, Position{1, 0}},
      CrystalSource{"PPKTP0", Position{0, 0}},
      CrystalSource{"PPKTP1", Position{1, 0}},
      BeamDisplacer{"BD2", Axis::Y, -1},
      HalfWavePlate{"HWP-H1", 45.0, Position{1, 0}},
      HalfWavePlate{"HWP-V0", 45.0, Position{0, -1}},
      BeamDisplacer{"BD3", Axis::X, -1},
  };
  return net;
}

ElementNet ElementNet::without(const std::string& label) const {
  ElementNet out;
  for (const auto& e : elements) {
    if (element_label(e) != label) out.elements.push_back(e);
  }
  return out;
}

namespace {

using Branches = std::vector<std::pair<PathMode, Complex>>;

Branches apply_jones(const JonesMatrix& m, const PathMode& in) {
  const int col = static_cast<int>(in.pol);
  return {{{in.pos, Pol::H}, m(0, col)}, {{in.pos, Pol::V}, m(1, col)}};
}

Branches apply(const Element& element, const PathMode& in) {
  if (const auto* bd = std::get_if<BeamDisplacer>(&element)) {
    PathMode out = in;
    if (in.pol == Pol::V) (bd->axis == Axis::X ? out.pos.x : out.pos.y) += bd->direction;
    return {{out, 1.0}};
  }
  if (const auto* h = std::get_if<HalfWavePlate>(&element)) {
    if (h->path && *h->path != in.pos) return {{in, 1.0}};
    return apply_jones(hwp_matrix(h->angle_deg), in);
  }
  if (const auto* q = std::get_if<QuarterWavePlate>(&element)) {
    if (q->path && *q->path != in.pos) return {{in, 1.0}};
    return apply_jones(qwp_matrix(q->angle_deg), in);
  }
  if (const auto* m = std::get_if<Mirror>(&element)) {
    if (in.pos == m->from) return {{{m->to, in.pol}, 1.0}};
    return {{in, 1.0}};
  }
  return {{in, 1.0}};
}

constexpr double kNegligible = 1e-24;

}  // namespace

PathPolState pump_input(double pump_phase) {
  PathPolState s;
  s.amplitudes[{Position{0, 0}, Pol::H}] = 1.0 / std::numbers::sqrt2;
  s.amplitudes[{Position{0, 0}, Pol::V}] = std::exp(kI * pump_phase) / std::numbers::sqrt2;
  return s;
}

TwoPhotonState propagate_network(const ElementNet& net, double pump_phase) {
  net.validate();

  PathPolState pump = pump_input(pump_phase);
  using PairKey = std::pair<PathMode, PathMode>;  // (signal, idler)
  std::map<PairKey, Complex> pairs;
  bool converted = false;

  for (const auto& element : net.elements) {
    if (const auto* crystal = std::get_if<CrystalSource>(&element)) {
      const auto it = pump.amplitudes.find({crystal->path, Pol::H});
      if (it != pump.amplitudes.end()) {
        pairs[{{crystal->path, Pol::H}, {crystal->path, Pol::V}}] += it->second;
      }
      converted = true;
      continue;
    }
    if (!converted) {
      PathPolState next;
      for (const auto& [mode, amp] : pump.amplitudes) {
        for (const auto& [out, u] : apply(element, mode)) next.amplitudes[out] += u * amp;
      }
      pump = std::move(next);
      continue;
    }
    std::map<PairKey, Complex> next;
    for (const auto& [key, amp] : pairs) {
      const Branches s_out = apply(element, key.first);
      const Branches i_out = apply(element, key.second);
      for (const auto& [sm, su] : s_out) {
        for (const auto& [im, iu] : i_out) {
          const Complex a = su * iu * amp;
          if (std::norm(a) > 0.0) next[{sm, im}] += a;
        }
      }
    }
    pairs = std::move(next);
  }

  std::set<std::pair<Position, Position>> ports;
  double norm2 = 0.0;
  for (const auto& [key, amp] : pairs) {
    if (std::norm(amp) <= kNegligible) continue;
    ports.insert({key.first.pos, key.second.pos});
    norm2 += std::norm(amp);
  }
  if (ports.empty()) throw NonInterferingNetwork("no photon pairs reach the output");
  if (ports.size() != 1) {
    throw NonInterferingNetwork("photons exit through " + std::to_string(ports.size()) +
                                " distinguishable port pairs");
  }
  if (ports.begin()->first == ports.begin()->second) {
    throw NonInterferingNetwork("signal and idler share one output port");
  }

  StateVector psi = StateVector::Zero();
  for (const auto& [key, amp] : pairs) {
    if (std::norm(amp) <= kNegligible) continue;
    psi(2 * static_cast<int>(key.first.pol) + static_cast<int>(key.second.pol)) += amp;
  }
  return TwoPhotonState::pure(psi / std::sqrt(norm2));
}

}  // namespace spdcsim::polarization
