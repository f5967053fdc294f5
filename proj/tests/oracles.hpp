#pragma once

// Independent reference computations used only by tests.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
  const auto step = [&](auto&& self, double lo, double hi, double flo, double fmid, double fhi, double whole,
                        double eps, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
    return self(self, lo, mid, flo, flm, fmid, left, 0.5 * eps, d - 1) +
           self(self, mid, hi, fmid, frm, fhi, right, 0.5 * eps, d - 1);
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return step(step, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  double flo = f(lo);
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Numeric FWHM of a symmetric function peaked at 0.
inline double numeric_fwhm(const std::function<double(double)>& f, double search_hi) {
  const double peak = f(0.0);
  return 2.0 * bisect([&](double t) { return f(t) - 0.5 * peak; }, 0.0, search_hi);
}

using C = std::complex<double>;

/// Born rule by explicit summation: sum_ij conj(k_i) rho_ij k_j.
inline double born(const std::vector<std::vector<C>>& rho, const std::vector<C>& k) {
  C s = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) s += std::conj(k[i]) * rho[i][j] * k[j];
  return s.real();
}

inline std::vector<C> linear_pair(double a_deg, double b_deg) {
  const double a = a_deg * std::numbers::pi / 180.0, b = b_deg * std::numbers::pi / 180.0;
  return {std::cos(a) * std::cos(b), std::cos(a) * std::sin(b), std::sin(a) * std::cos(b), std::sin(a) * std::sin(b)};
}

}  // namespace oracle
