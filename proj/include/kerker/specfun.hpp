#pragma once

// Special functions for the Mie series and far-field synthesis: the angular
// functions pi_n / tau_n, spherical Bessel functions of real or complex
// argument, Riccati-Bessel functions and the small-argument-safe ratios
// j_n(x) / x^n used by the exact multipole kernels.
//
// Everything here is header-only and templated on the scalar so the same
// code serves double, long double and complex arguments.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "kerker/errors.hpp"

namespace kerker {

template <typename T>
struct real_of {
  using type = T;
};
template <typename T>
struct real_of<std::complex<T>> {
  using type = T;
};
template <typename T>
using real_of_t = typename real_of<T>::type;

template <typename Real>
struct AngularFunctions {
  int order = 0;
  Real theta = 0;
  Real pi = 0;   // P_n^1(cos theta) / sin(theta)
  Real tau = 0;  // d P_n^1(cos theta) / d theta
};

/// Upward recurrence in mu = cos(theta). Writes pi_n and tau_n for
/// n = 1..pi.size() into pi[n-1], tau[n-1]; never divides by sin(theta).
template <typename Real>
void angular_functions_from_cos(Real mu, std::span<Real> pi, std::span<Real> tau) {
  Real pi_nm2 = 0;  // pi_{n-2}
  Real pi_nm1 = 0;  // pi_{n-1}
  for (std::size_t idx = 0; idx < pi.size(); ++idx) {
    const Real n = static_cast<Real>(idx + 1);
    Real pi_n;
    if (idx == 0) {
      pi_n = 1;
    } else {
      pi_n = ((2 * n - 1) / (n - 1)) * mu * pi_nm1 - (n / (n - 1)) * pi_nm2;
    }
    tau[idx] = n * mu * pi_n - (n + 1) * pi_nm1;
    pi[idx] = pi_n;
    pi_nm2 = pi_nm1;
    pi_nm1 = pi_n;
  }
}

template <typename Real>
std::vector<AngularFunctions<Real>> angular_functions(int n_max, Real theta) {
  const Real pi_const = static_cast<Real>(3.141592653589793238462643383279502884L);
  if (n_max < 1) throw DomainError("angular_functions: n_max must be >= 1");
  if (!(theta >= 0 && theta <= pi_const))
    throw DomainError("angular_functions: theta outside [0, pi]");

  std::vector<Real> pi(n_max), tau(n_max);
  angular_functions_from_cos<Real>(std::cos(theta), pi, tau);

  std::vector<AngularFunctions<Real>> out(n_max);
  for (int n = 1; n <= n_max; ++n) out[n - 1] = {n, theta, pi[n - 1], tau[n - 1]};
  return out;
}

/// j_0 .. j_{n_max} by downward (Miller) recurrence started at
/// n_max + ceil(|z|) + 15 and normalised against the closed form of j_0 or j_1.
template <typename Scalar>
std::vector<Scalar> spherical_bessel_j(int n_max, Scalar z) {
  using Real = real_of_t<Scalar>;
  if (n_max < 0) throw DomainError("spherical_bessel_j: negative order");

  std::vector<Scalar> out(n_max + 1, Scalar(0));
  if (z == Scalar(0)) {
    out[0] = Scalar(1);
    return out;
  }

  const int start = n_max + static_cast<int>(std::ceil(std::abs(z))) + 15;
  std::vector<Scalar> j(start + 2, Scalar(0));
  j[start + 1] = Scalar(0);
  j[start] = Scalar(Real(1e-30));
  for (int n = start; n >= 1; --n) {
    j[n - 1] = (Real(2 * n + 1) / z) * j[n] - j[n + 1];
    if (std::abs(j[n - 1]) > Real(1e150)) {
      for (int k = n - 1; k <= start; ++k) j[k] *= Real(1e-150);
    }
  }

  const Scalar s = std::sin(z);
  const Scalar c = std::cos(z);
  const Scalar j0 = s / z;
  const Scalar j1 = s / (z * z) - c / z;
  const Scalar scale = std::abs(j0) >= std::abs(j1) ? j0 / j[0] : j1 / j[1];
  for (int n = 0; n <= n_max; ++n) out[n] = j[n] * scale;
  return out;
}

/// y_0 .. y_{n_max} by upward recurrence (stable for the dominant solution).
template <typename Scalar>
std::vector<Scalar> spherical_bessel_y(int n_max, Scalar z) {
  using Real = real_of_t<Scalar>;
  if (n_max < 0) throw DomainError("spherical_bessel_y: negative order");
  if (z == Scalar(0)) throw DomainError("spherical_bessel_y: singular at z = 0");

  std::vector<Scalar> y(n_max + 1);
  const Scalar s = std::sin(z);
  const Scalar c = std::cos(z);
  y[0] = -c / z;
  if (n_max >= 1) y[1] = -c / (z * z) - s / z;
  for (int n = 1; n < n_max; ++n) y[n + 1] = (Real(2 * n + 1) / z) * y[n] - y[n - 1];
  return y;
}

template <typename Real>
struct RiccatiBessel {
  // Index n = 0..n_max.
  std::vector<std::complex<Real>> psi;   // x j_n(x)
  std::vector<std::complex<Real>> xi;    // x (j_n(x) + i y_n(x)), outgoing
  std::vector<std::complex<Real>> dpsi;  // d psi_n / dx
  std::vector<std::complex<Real>> dxi;   // d xi_n / dx
  // Set when n_max exceeds |x| + 20: the high orders are far beyond where
  // any series using them has converged.
  bool accuracy_warning = false;
};

template <typename Real>
RiccatiBessel<Real> riccati_bessel(int n_max, std::complex<Real> x) {
  using C = std::complex<Real>;
  if (n_max < 1) throw DomainError("riccati_bessel: n_max must be >= 1");
  if (std::abs(x) == Real(0)) throw DomainError("riccati_bessel: x must be nonzero");

  const auto j = spherical_bessel_j<C>(n_max, x);
  const auto y = spherical_bessel_y<C>(n_max, x);
  const C i_unit(0, 1);

  RiccatiBessel<Real> rb;
  rb.psi.resize(n_max + 1);
  rb.xi.resize(n_max + 1);
  rb.dpsi.resize(n_max + 1);
  rb.dxi.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    rb.psi[n] = x * j[n];
    rb.xi[n] = x * (j[n] + i_unit * y[n]);
  }
  rb.dpsi[0] = std::cos(x);
  rb.dxi[0] = std::cos(x) + i_unit * std::sin(x);
  for (int n = 1; n <= n_max; ++n) {
    rb.dpsi[n] = rb.psi[n - 1] - Real(n) * rb.psi[n] / x;
    rb.dxi[n] = rb.xi[n - 1] - Real(n) * rb.xi[n] / x;
  }
  rb.accuracy_warning = n_max > std::abs(x) + Real(20);
  return rb;
}

/// j_N(x) / x^N for real x >= 0, finite at x = 0 where it equals 1/(2N+1)!!.
template <int N, typename Real>
Real spherical_bessel_ratio(Real x) {
  static_assert(N >= 0);
  x = std::abs(x);
  if (x < Real(0.5)) {
    // sum_k (-x^2/2)^k / (k! (2N+3)(2N+5)...(2N+2k+1)), scaled by 1/(2N+1)!!
    Real double_fact = 1;
    for (int k = 2 * N + 1; k > 1; k -= 2) double_fact *= Real(k);
    const Real h = -x * x / 2;
    Real term = 1;
    Real sum = 1;
    for (int k = 1; k < 14; ++k) {
      term *= h / (Real(k) * Real(2 * N + 2 * k + 1));
      sum += term;
    }
    return sum / double_fact;
  }
  const auto j = spherical_bessel_j<Real>(N, x);
  Real xn = 1;
  for (int k = 0; k < N; ++k) xn *= x;
  return j[N] / xn;
}

}  // namespace kerker
