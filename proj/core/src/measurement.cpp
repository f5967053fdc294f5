#include "spdcsim/measurement.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdcsim::measurement {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

Jones linear_analyzer(double angle_deg) {
  if (!std::isfinite(angle_deg)) throw std::domain_error("analyzer angle must be finite");
  return Jones(std::cos(angle_deg * kDeg), std::sin(angle_deg * kDeg));
}

Jones analyzer_h() { return Jones(1.0, 0.0); }
Jones analyzer_v() { return Jones(0.0, 1.0); }
Jones analyzer_d() { return linear_analyzer(45.0); }
Jones analyzer_r() {
  return Jones(1.0 / std::numbers::sqrt2, std::complex<double>(0.0, -1.0 / std::numbers::sqrt2));
}

ProjectorSetting::ProjectorSetting(const Jones& arm0, const Jones& arm1) {
  const double n0 = arm0.norm();
  const double n1 = arm1.norm();
  if (!(n0 > 0.0) || !(n1 > 0.0) || !std::isfinite(n0) || !std::isfinite(n1)) {
    throw std::invalid_argument("projector states must be nonzero");
  }
  arm0_ = arm0 / n0;
  arm1_ = arm1 / n1;
}

ProjectorSetting ProjectorSetting::linear(double alpha_deg, double beta_deg) {
  return {linear_analyzer(alpha_deg), linear_analyzer(beta_deg)};
}

polarization::StateVector ProjectorSetting::ket() const {
  polarization::StateVector k;
  k << arm0_(0) * arm1_(0), arm0_(0) * arm1_(1), arm0_(1) * arm1_(0), arm0_(1) * arm1_(1);
  return k;
}

double coincidence_prob(const TwoPhotonState& state, const ProjectorSetting& setting) {
  const auto k = setting.ket();
  return (k.adjoint() * state.rho() * k)(0).real();
}

InterferenceCurve interference_curve(const TwoPhotonState& state, double alpha_deg,
                                     std::span<const double> beta_grid_deg) {
  if (beta_grid_deg.size() < 8) throw std::invalid_argument("interference curve needs >= 8 points");
  const auto [lo, hi] = std::minmax_element(beta_grid_deg.begin(), beta_grid_deg.end());
  if (*hi - *lo < 180.0 - 1e-9) throw std::invalid_argument("interference grid must cover >= 180 degrees");

  InterferenceCurve curve;
  const auto n = static_cast<Eigen::Index>(beta_grid_deg.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double beta = beta_grid_deg[static_cast<std::size_t>(i)];
    p(i) = coincidence_prob(state, ProjectorSetting::linear(alpha_deg, beta));
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(2.0 * beta * kDeg);
    design(i, 2) = std::sin(2.0 * beta * kDeg);
    curve.beta_deg.push_back(beta);
    curve.probability.push_back(p(i));
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(p);
  curve.offset = coef(0);
  curve.amplitude = std::hypot(coef(1), coef(2));
  if (!(curve.offset > 1e-15) || curve.amplitude <= 1e-12 * std::abs(curve.offset)) {
    curve.degenerate = true;
    curve.visibility = 0.0;
  } else {
    curve.visibility = curve.amplitude / curve.offset;
  }
  return curve;
}

double correlation_E(const TwoPhotonState& state, double a_deg, double b_deg) {
  const double pp = coincidence_prob(state, ProjectorSetting::linear(a_deg, b_deg));
  const double qq = coincidence_prob(state, ProjectorSetting::linear(a_deg + 90.0, b_deg + 90.0));
  const double pq = coincidence_prob(state, ProjectorSetting::linear(a_deg, b_deg + 90.0));
  const double qp = coincidence_prob(state, ProjectorSetting::linear(a_deg + 90.0, b_deg));
  const double sum = pp + qq + pq + qp;
  if (!(sum > 0.0)) return 0.0;
  return (pp + qq - pq - qp) / sum;
}

double chsh_S(const TwoPhotonState& state, const BellSettings& s) {
  return std::abs(correlation_E(state, s.a, s.b) - correlation_E(state, s.a, s.b_prime) +
                  correlation_E(state, s.a_prime, s.b) + correlation_E(state, s.a_prime, s.b_prime));
}

ChshResult chsh_max(const TwoPhotonState& state) {
  // Analyzer angles repeat every 180 degrees; a + 90 flips the sign of E.
  constexpr int kSteps = 360;
  constexpr double kStep = 0.5;
  constexpr int kQuarter = kSteps / 2;

  std::vector<double> prob(kSteps * kSteps);
  for (int i = 0; i < kSteps; ++i) {
    for (int j = 0; j < kSteps; ++j) {
      prob[i * kSteps + j] = coincidence_prob(state, ProjectorSetting::linear(i * kStep, j * kStep));
    }
  }
  auto p = [&](int i, int j) { return prob[(i % kSteps) * kSteps + (j % kSteps)]; };
  std::vector<double> e(kSteps * kSteps);
  for (int i = 0; i < kSteps; ++i) {
    for (int j = 0; j < kSteps; ++j) {
      const double pp = p(i, j), qq = p(i + kQuarter, j + kQuarter);
      const double pq = p(i, j + kQuarter), qp = p(i + kQuarter, j);
      const double sum = pp + qq + pq + qp;
      e[i * kSteps + j] = sum > 0.0 ? (pp + qq - pq - qp) / sum : 0.0;
    }
  }

  // S = X(a) + Y(a') with X = E(a,b) - E(a,b'), Y = E(a',b) + E(a',b'). Since
  // X(a+90) = -X(a) the absolute value is attained by maximizing X and Y
  // separately for each (b, b').
  ChshResult best{-1.0, {}};
  for (int jb = 0; jb < kSteps; ++jb) {
    for (int jbp = 0; jbp < kSteps; ++jbp) {
      double max_x = -2.0, max_y = -2.0;
      int ia = 0, iap = 0;
      for (int i = 0; i < kSteps; ++i) {
        const double eb = e[i * kSteps + jb];
        const double ebp = e[i * kSteps + jbp];
        if (eb - ebp > max_x) { max_x = eb - ebp; ia = i; }
        if (eb + ebp > max_y) { max_y = eb + ebp; iap = i; }
      }
      if (max_x + max_y > best.s) {
        best.s = max_x + max_y;
        best.settings = {ia * kStep, iap * kStep, jb * kStep, jbp * kStep};
      }
    }
  }

  // Compass search on the continuous S.
  std::array<double, 4> x = {best.settings.a, best.settings.a_prime, best.settings.b, best.settings.b_prime};
  auto eval = [&](const std::array<double, 4>& v) { return chsh_S(state, {v[0], v[1], v[2], v[3]}); };
  double fx = eval(x);
  for (double step = 0.25; step >= 0.005; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t k = 0; k < 4; ++k) {
        for (double dir : {1.0, -1.0}) {
          auto trial = x;
          trial[k] += dir * step;
          const double ft = eval(trial);
          if (ft > fx + 1e-15) {
            x = trial;
            fx = ft;
            improved = true;
          }
        }
      }
    }
  }
  return {fx, {x[0], x[1], x[2], x[3]}};
}

}  // namespace spdcsim::measurement
