#include "kerker/mie.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kerker/errors.hpp"
#include "kerker/specfun.hpp"

namespace kerker {

MieCoefficients MieCoefficients::from_moments(std::vector<cplx> a, std::vector<cplx> b) {
  const std::size_t n = std::max(a.size(), b.size());
  a.resize(n);
  b.resize(n);
  MieCoefficients c;
  c.a = std::move(a);
  c.b = std::move(b);
  return c;
}

int wiscombe_order(double x) {
  return static_cast<int>(std::ceil(x + 4.05 * std::cbrt(x) + 2.0));
}

MieCoefficients mie_coefficients(double x, cplx m, std::optional<int> n_max,
                                 double tail_tolerance) {
  if (!(x > 0.0)) throw DomainError("mie_coefficients: size parameter must be positive");
  if (m.imag() < 0.0)
    throw DomainError("mie_coefficients: Im(m) < 0 is a gain medium under exp(-i omega t)");
  const int order = n_max.value_or(wiscombe_order(x));
  if (order < 1) throw DomainError("mie_coefficients: n_max must be >= 1");

  const auto out = riccati_bessel<double>(order, cplx(x, 0.0));
  const auto in = riccati_bessel<double>(order, m * x);

  MieCoefficients c;
  c.size_parameter = x;
  c.relative_index = m;
  c.a.resize(order);
  c.b.resize(order);
  for (int n = 1; n <= order; ++n) {
    const cplx psi = out.psi[n], dpsi = out.dpsi[n];
    const cplx xi = out.xi[n], dxi = out.dxi[n];
    const cplx psi_m = in.psi[n], dpsi_m = in.dpsi[n];
    c.a[n - 1] = (m * psi_m * dpsi - psi * dpsi_m) / (m * psi_m * dxi - xi * dpsi_m);
    c.b[n - 1] = (psi_m * dpsi - m * psi * dpsi_m) / (psi_m * dxi - m * xi * dpsi_m);
  }

  double largest = 0.0;
  for (int n = 0; n < order; ++n) largest = std::max(largest, std::abs(c.a[n]) + std::abs(c.b[n]));
  const double tail = std::abs(c.a.back()) + std::abs(c.b.back());
  if (largest > 0.0 && tail > tail_tolerance * largest) {
    throw ConvergenceError("mie_coefficients: series not converged at n_max = " +
                               std::to_string(order),
                           tail / largest, order);
  }
  return c;
}

MieEfficiencies mie_efficiencies(const MieCoefficients& c) {
  if (!(c.size_parameter > 0.0))
    throw DomainError("mie_efficiencies: coefficients carry no size parameter");
  double sca = 0.0, ext = 0.0;
  for (int n = 1; n <= c.n_max(); ++n) {
    const double w = 2.0 * n + 1.0;
    sca += w * (std::norm(c.a_n(n)) + std::norm(c.b_n(n)));
    ext += w * (c.a_n(n) + c.b_n(n)).real();
  }
  const double f = 2.0 / (c.size_parameter * c.size_parameter);
  MieEfficiencies q;
  q.q_sca = f * sca;
  q.q_ext = f * ext;
  q.q_abs = q.q_ext - q.q_sca;
  return q;
}

double extinction_from_forward_amplitude(const MieCoefficients& c) {
  if (!(c.size_parameter > 0.0))
    throw DomainError("extinction_from_forward_amplitude: no size parameter");
  // S(0) from the angular sums with pi_n(1) = tau_n(1) = n(n+1)/2.
  std::vector<double> pi(c.n_max()), tau(c.n_max());
  angular_functions_from_cos<double>(1.0, pi, tau);
  cplx s0{};
  for (int n = 1; n <= c.n_max(); ++n) {
    const double w = (2.0 * n + 1.0) / (n * (n + 1.0));
    s0 += w * (c.a_n(n) * tau[n - 1] + c.b_n(n) * pi[n - 1]);
  }
  return 4.0 / (c.size_parameter * c.size_parameter) * s0.real();
}

SphereInteriorField::SphereInteriorField(const MieSphere& sphere, cplx amplitude)
    : sphere_(sphere), amplitude_(amplitude) {
  if (!(sphere.radius_nm > 0.0) || !(sphere.wavelength_nm > 0.0))
    throw DomainError("SphereInteriorField: radius and wavelength must be positive");
  const double x = sphere.size_parameter();
  const cplx m = sphere.relative_index;
  const int order = wiscombe_order(std::max(x, std::abs(m) * x)) + 4;

  scattering_ = mie_coefficients(x, m, order, 1.0);
  const auto out = riccati_bessel<double>(order, cplx(x, 0.0));
  const auto in = riccati_bessel<double>(order, m * x);
  c_.resize(order);
  d_.resize(order);
  for (int n = 1; n <= order; ++n) {
    c_[n - 1] = m * kI / (in.psi[n] * out.dxi[n] - m * out.xi[n] * in.dpsi[n]);
    d_[n - 1] = m * kI / (m * in.psi[n] * out.dxi[n] - out.xi[n] * in.dpsi[n]);
  }
}

Vec3c SphereInteriorField::operator()(const Vec3d& r_nm) const {
  const double r = r_nm.norm();
  if (!(r < sphere_.radius_nm))
    throw DomainError("SphereInteriorField: point outside the sphere");

  const int order = static_cast<int>(c_.size());
  const double k = wavenumber(sphere_.wavelength_nm);
  const cplx rho = sphere_.relative_index * k * r;

  double theta = 0.0, phi = 0.0;
  if (r > 0.0) {
    theta = std::acos(std::clamp(r_nm.z() / r, -1.0, 1.0));
    phi = std::atan2(r_nm.y(), r_nm.x());
  }
  const double st = std::sin(theta), ct = std::cos(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  const Vec3d e_r(st * cp, st * sp, ct);
  const Vec3d e_t(ct * cp, ct * sp, -st);
  const Vec3d e_p(-sp, cp, 0.0);

  std::vector<double> pi(order), tau(order);
  angular_functions_from_cos<double>(ct, pi, tau);
  const auto j = spherical_bessel_j<cplx>(order + 1, rho);

  cplx er{}, et{}, ep{};
  cplx i_pow = 1.0;
  for (int n = 1; n <= order; ++n) {
    i_pow *= kI;
    const double nn = n * (n + 1.0);
    const cplx en = i_pow * amplitude_ * (2.0 * n + 1.0) / nn;
    const cplx j_over_rho = (j[n - 1] + j[n + 1]) / (2.0 * n + 1.0);
    const cplx dj = j[n - 1] - double(n) * j_over_rho;  // [rho j_n]' / rho

    // c_n M_o1n - i d_n N_e1n
    const cplx cm = c_[n - 1], dn = -kI * d_[n - 1];
    er += en * dn * (cp * nn * st * pi[n - 1] * j_over_rho);
    et += en * (cm * cp * pi[n - 1] * j[n] + dn * cp * tau[n - 1] * dj);
    ep += en * (-cm * sp * tau[n - 1] * j[n] - dn * sp * pi[n - 1] * dj);
  }
  return er * e_r.cast<cplx>() + et * e_t.cast<cplx>() + ep * e_p.cast<cplx>();
}

}  // namespace kerker
