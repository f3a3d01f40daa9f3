#pragma once

#include <complex>
#include <numbers>

namespace kerker {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kEpsilon0 = 8.8541878128e-12;  // F/m
inline constexpr double kMu0 = 1.25663706212e-6;       // H/m
inline constexpr double kZ0 = kMu0 * kSpeedOfLight;     // Ohm
inline constexpr double kNanometre = 1e-9;              // m

// Harmonic fields carry exp(kTimeSign * i * omega * t). With the sign fixed to
// -1 outgoing spherical waves are exp(+ikr), the outgoing Riccati-Hankel
// function is x (j_n + i y_n), passive media have Im(eps) >= 0 and the
// polarization current of a linear medium is J = -i omega eps0 (eps_r - 1) E.
inline constexpr double kTimeSign = -1.0;

inline double angular_frequency(double vacuum_wavelength_nm) {
  return 2.0 * kPi * kSpeedOfLight / (vacuum_wavelength_nm * kNanometre);
}

inline double wavenumber(double vacuum_wavelength_nm) {
  return 2.0 * kPi / vacuum_wavelength_nm;
}

}  // namespace kerker
