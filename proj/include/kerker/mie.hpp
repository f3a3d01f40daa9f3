#pragma once

// Analytic Mie solution for a homogeneous sphere in vacuum. Used as the
// reference against which the volume solver and the multipole
// decomposition are checked.

#include <complex>
#include <optional>
#include <vector>

#include "kerker/constants.hpp"
#include "kerker/types.hpp"

namespace kerker {

struct MieCoefficients {
  std::vector<cplx> a;  // a[n-1]: electric order n
  std::vector<cplx> b;  // b[n-1]: magnetic order n
  double size_parameter = 0.0;  // 0 when the coefficients were set by hand
  cplx relative_index{1.0, 0.0};

  int n_max() const { return static_cast<int>(a.size()); }
  cplx a_n(int n) const { return n >= 1 && n <= n_max() ? a[n - 1] : cplx{}; }
  cplx b_n(int n) const { return n >= 1 && n <= n_max() ? b[n - 1] : cplx{}; }

  /// Hand-specified moments, e.g. {a1, a2} and {b1, b2}. Shorter list is zero-padded.
  static MieCoefficients from_moments(std::vector<cplx> a, std::vector<cplx> b);
};

struct MieEfficiencies {
  double q_sca = 0.0;
  double q_ext = 0.0;
  double q_abs = 0.0;
};

/// Wiscombe truncation ceil(x + 4.05 x^(1/3) + 2).
int wiscombe_order(double x);

/// Throws DomainError for x <= 0 or Im(m) < 0, ConvergenceError when the
/// last retained order still carries more than `tail_tolerance` of the
/// largest coefficient.
MieCoefficients mie_coefficients(double x, cplx m, std::optional<int> n_max = std::nullopt,
                                 double tail_tolerance = 1e-8);

MieEfficiencies mie_efficiencies(const MieCoefficients& c);

/// Q_ext from the forward amplitude S(0) = sum (2n+1)/2 (a_n + b_n).
double extinction_from_forward_amplitude(const MieCoefficients& c);

struct MieSphere {
  double radius_nm = 0.0;
  double wavelength_nm = 0.0;
  cplx relative_index{1.0, 0.0};

  double size_parameter() const { return wavenumber(wavelength_nm) * radius_nm; }
};

/// Field inside the sphere for the canonical incident wave
/// E0 x_hat exp(i k z), built from the interior coefficients c_n, d_n.
class SphereInteriorField {
 public:
  explicit SphereInteriorField(const MieSphere& sphere, cplx amplitude = 1.0);

  /// Throws DomainError when |r| >= radius.
  Vec3c operator()(const Vec3d& r_nm) const;

  const std::vector<cplx>& c() const { return c_; }
  const std::vector<cplx>& d() const { return d_; }
  const MieCoefficients& scattering() const { return scattering_; }

 private:
  MieSphere sphere_;
  cplx amplitude_;
  MieCoefficients scattering_;
  std::vector<cplx> c_;
  std::vector<cplx> d_;
};

}  // namespace kerker
