#include "kerker/multipole.hpp"

#include <array>
#include <cmath>

#include "kerker/dda.hpp"
#include "kerker/errors.hpp"
#include "kerker/specfun.hpp"

namespace kerker {
namespace {

// Neumaier-compensated sum of one real quantity.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

// Compensated sums of the 3 + 3 + 9 + 9 + 3 + 9 complex integrals.
struct Accumulator {
  static constexpr int kSize = 36;
  std::array<CompensatedSum, 2 * kSize> parts;

  void add(int slot, cplx v) {
    parts[2 * slot].add(v.real());
    parts[2 * slot + 1].add(v.imag());
  }
  cplx get(int slot) const { return {parts[2 * slot].value(), parts[2 * slot + 1].value()}; }
};

// j_n(x) / x^n for n = 0..3.
std::array<double, 4> bessel_ratios(double x) {
  if (x < 0.5) {
    return {spherical_bessel_ratio<0>(x), spherical_bessel_ratio<1>(x), spherical_bessel_ratio<2>(x),
            spherical_bessel_ratio<3>(x)};
  }
  const auto j = spherical_bessel_j<double>(3, x);
  return {j[0], j[1] / x, j[2] / (x * x), j[3] / (x * x * x)};
}

}  // namespace

template <MultipoleKernel Kernel>
CartesianMultipoles decompose(const FieldGrid& grid, const Fields& current, const Vec3d& origin_nm) {
  const Eigen::Index n = grid.size();
  if (current.cols() != n) throw DomainError("decompose: current does not match the grid");
  if (n == 0) throw DomainError("decompose: empty grid");
  if (grid.volumes.size() != n) throw DomainError("decompose: grid has no cell volumes");
  if (!(grid.wavelength_nm > 0.0)) throw DomainError("decompose: wavelength must be positive");
  const Vec3d lo = grid.points.rowwise().minCoeff(), hi = grid.points.rowwise().maxCoeff();
  const double slack = 1e-9 * std::max(1.0, (hi - lo).norm());
  if (((origin_nm - lo).array() < -slack).any() || ((origin_nm - hi).array() > slack).any())
    throw DomainError("decompose: origin outside the bounding box of the grid");

  const double k = wavenumber(grid.wavelength_nm) / kNanometre;  // 1/m
  const double omega = angular_frequency(grid.wavelength_nm);
  const double k2 = k * k;

  // Slots: 0-2 int J j0, 3-5 int [3(r.J) r - r^2 J] j2/x^2, 6-8 int (r x J) j1/x,
  // 9-17 Qe first kernel, 18-26 Qe second kernel, 27-35 Qm kernel (row-major).
  Accumulator acc;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3d r = (grid.points.col(i) - origin_nm) * kNanometre;
    const double dv = grid.volumes[i] * kNanometre * kNanometre * kNanometre;
    const Vec3c j = current.col(i) * dv;
    if (j.isZero(0.0)) continue;

    std::array<double, 4> w;
    if constexpr (Kernel == MultipoleKernel::exact) {
      w = bessel_ratios(k * r.norm());
    } else {
      w = {1.0, 1.0 / 3.0, 1.0 / 15.0, 1.0 / 105.0};
    }
    const double r2 = r.squaredNorm();
    const Vec3c rc = r.cast<cplx>();
    const cplx rj = rc.dot(j);  // r is real, so no conjugation issue
    const Vec3c rxj = cross(rc, j);

    for (int a = 0; a < 3; ++a) {
      acc.add(a, j[a] * w[0]);
      acc.add(3 + a, (3.0 * rj * r[a] - r2 * j[a]) * w[2]);
      acc.add(6 + a, rxj[a] * w[1]);
      for (int b = 0; b < 3; ++b) {
        const double d = a == b ? 1.0 : 0.0;
        const cplx sym = r[a] * j[b] + r[b] * j[a];
        acc.add(9 + 3 * a + b, (3.0 * sym - 2.0 * rj * d) * w[1]);
        acc.add(18 + 3 * a + b, (5.0 * r[a] * r[b] * rj - sym * r2 - r2 * rj * d) * w[3]);
        acc.add(27 + 3 * a + b, (r[a] * rxj[b] + r[b] * rxj[a]) * w[2]);
      }
    }
  }

  const cplx inv_iw = 1.0 / (kI * omega);
  const bool exact = Kernel == MultipoleKernel::exact;
  CartesianMultipoles mp;
  mp.origin_nm = origin_nm;
  mp.wavelength_nm = grid.wavelength_nm;
  mp.single_point = n == 1;
  for (int a = 0; a < 3; ++a) {
    mp.p[a] = -inv_iw * (acc.get(a) + (exact ? 0.5 * k2 * acc.get(3 + a) : cplx{}));
    mp.m[a] = 1.5 * acc.get(6 + a);
    for (int b = 0; b < 3; ++b) {
      mp.qe(a, b) = -3.0 * inv_iw * (acc.get(9 + 3 * a + b) + (exact ? 2.0 * k2 * acc.get(18 + 3 * a + b) : cplx{}));
      mp.qm(a, b) = 15.0 * acc.get(27 + 3 * a + b);
    }
  }
  // Symmetric and traceless by construction; remove rounding residue.
  for (Mat3c* q : {&mp.qe, &mp.qm}) {
    *q = 0.5 * (*q + q->transpose()).eval();
    const cplx tr = q->trace() / 3.0;
    q->diagonal().array() -= tr;
  }
  return mp;
}

template <MultipoleKernel Kernel>
CartesianMultipoles decompose(const FieldGrid& grid, const Vec3d& origin_nm) {
  if (!grid.solved()) throw DomainError("decompose: grid carries no field, currents unavailable");
  return decompose<Kernel>(grid, induced_current(grid), origin_nm);
}

template CartesianMultipoles decompose<MultipoleKernel::exact>(const FieldGrid&, const Fields&, const Vec3d&);
template CartesianMultipoles decompose<MultipoleKernel::long_wavelength>(const FieldGrid&, const Fields&,
                                                                         const Vec3d&);
template CartesianMultipoles decompose<MultipoleKernel::exact>(const FieldGrid&, const Vec3d&);
template CartesianMultipoles decompose<MultipoleKernel::long_wavelength>(const FieldGrid&, const Vec3d&);

MomentEfficiencies efficiencies(const CartesianMultipoles& mp, double k_per_nm, cplx e0,
                                double geometric_cross_section_nm2,
                                std::optional<double> total_cross_section_nm2) {
  if (std::abs(e0) == 0.0) throw DomainError("efficiencies: zero incident amplitude");
  if (!(k_per_nm > 0.0)) throw DomainError("efficiencies: wavenumber must be positive");
  if (!(geometric_cross_section_nm2 > 0.0))
    throw DomainError("efficiencies: geometric cross section must be positive");
  const double k = k_per_nm / kNanometre;
  const double pref = std::pow(k, 4) / (6.0 * kPi * kEpsilon0 * kEpsilon0 * std::norm(e0));
  const double to_eff = 1.0 / (geometric_cross_section_nm2 * kNanometre * kNanometre);
  const double c = kSpeedOfLight;

  MomentEfficiencies q;
  q.c_p = pref * mp.p.squaredNorm() * to_eff;
  q.c_m = pref * mp.m.squaredNorm() / (c * c) * to_eff;
  q.c_qe = pref * k * k * mp.qe.squaredNorm() / 120.0 * to_eff;
  q.c_qm = pref * k * k * mp.qm.squaredNorm() / (120.0 * c * c) * to_eff;
  if (total_cross_section_nm2) {
    q.c_total = *total_cross_section_nm2 / geometric_cross_section_nm2;
    q.residual = q.c_total - q.partial_sum();
  } else {
    q.c_total = q.partial_sum();
  }
  return q;
}

MieCoefficients to_mie_moments(const CartesianMultipoles& mp, double k_per_nm, const PlaneWave& excitation) {
  if (!excitation.is_canonical())
    throw DomainError("to_mie_moments: needs a plane wave along +z polarised along x");
  const cplx e0 = excitation.amplitude * excitation.polarization.x() / excitation.polarization.norm();
  if (std::abs(e0) == 0.0) throw DomainError("to_mie_moments: zero incident amplitude");
  if (!(k_per_nm > 0.0)) throw DomainError("to_mie_moments: wavenumber must be positive");
  const double k = k_per_nm / kNanometre;
  const double k3 = k * k * k, k4 = k3 * k;
  const double c = kSpeedOfLight;
  const cplx dip = 6.0 * kPi * kEpsilon0 * e0;
  const cplx quad = 60.0 * kPi * kEpsilon0 * e0;

  MieCoefficients out;
  out.a = {-kI * k3 * mp.p.x() / dip, -k4 * mp.qe(0, 2) / quad};
  out.b = {-kI * k3 * mp.m.y() / (c * dip), -k4 * mp.qm(1, 2) / (c * quad)};
  out.size_parameter = 0.0;
  return out;
}

}  // namespace kerker
