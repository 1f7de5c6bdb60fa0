#pragma once
// Closed forms and brute-force quadrature used as independent references in the tests.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

// composite Simpson on [lo, hi] with n (even) panels
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n = 200000) {
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

// e^{-c x^2} under fhat(xi) = (2pi)^{-1/2} int e^{-i xi x} f dx
inline double gaussian_fourier(double c, double xi) { return std::exp(-xi * xi / (4.0 * c)) / std::sqrt(2.0 * c); }

// solution of u_t = i u_xx with u(x,0) = e^{-c x^2}
inline cplx free_gaussian(double c, double x, double t) {
  const cplx d = 1.0 + cplx(0.0, 4.0 * c * t);
  return std::exp(-c * x * x / d) / std::sqrt(d);
}

// solution of u_t = a u_xx with u(x,0) = e^{-c x^2}
inline double heat_gaussian(double a, double c, double x, double t) {
  const double d = 1.0 + 4.0 * a * c * t;
  return std::exp(-c * x * x / d) / std::sqrt(d);
}

// heat flow of the indicator of [-1, 1] under u_t = a u_xx
inline double heat_box(double a, double x, double t) {
  const double s = 2.0 * std::sqrt(a * t);
  return 0.5 * (std::erf((x + 1.0) / s) - std::erf((x - 1.0) / s));
}

}  // namespace oracle
