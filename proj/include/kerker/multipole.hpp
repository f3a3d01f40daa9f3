#pragma once

// Cartesian multipole moments of a volume current distribution, in SI units,
// with spherical-Bessel kernels that stay exact beyond the long-wavelength
// limit:
//
//   p   = -1/(i w) { int J j0(kr) + k^2/2 int [3 (r.J) r - r^2 J] j2(kr)/(kr)^2 }
//   m   = 3/2 int (r x J) j1(kr)/(kr)
//   Qe  = -3/(i w) { int [3 (r_b J_a + r_a J_b) - 2 (r.J) d_ab] j1(kr)/(kr)
//                    + 2 k^2 int [5 r_a r_b (r.J) - (r_a J_b + r_b J_a) r^2
//                                  - r^2 (r.J) d_ab] j3(kr)/(kr)^3 }
//   Qm  = 15 int [r_a (r x J)_b + r_b (r x J)_a] j2(kr)/(kr)^2
//
// The long-wavelength kernel keeps only the leading term of each series.

#include <optional>

#include "kerker/field_grid.hpp"
#include "kerker/mie.hpp"

namespace kerker {

struct CartesianMultipoles {
  Vec3c p = Vec3c::Zero();   // C m
  Vec3c m = Vec3c::Zero();   // A m^2
  Mat3c qe = Mat3c::Zero();  // C m^2, symmetric and traceless
  Mat3c qm = Mat3c::Zero();  // A m^3, symmetric and traceless
  Vec3d origin_nm = Vec3d::Zero();
  double wavelength_nm = 0.0;
  bool single_point = false;  // computed from a one-point grid
};

enum class MultipoleKernel { exact, long_wavelength };

/// Moments of `current` (A/m^2 per grid point, weighted by the grid's cell
/// volumes) about `origin_nm`, which must lie inside the bounding box of
/// the grid points.
template <MultipoleKernel Kernel = MultipoleKernel::exact>
CartesianMultipoles decompose(const FieldGrid& grid, const Fields& current, const Vec3d& origin_nm);

/// Uses induced_current(grid); throws DomainError when the field is missing.
template <MultipoleKernel Kernel = MultipoleKernel::exact>
CartesianMultipoles decompose(const FieldGrid& grid, const Vec3d& origin_nm);

extern template CartesianMultipoles decompose<MultipoleKernel::exact>(const FieldGrid&, const Fields&,
                                                                      const Vec3d&);
extern template CartesianMultipoles decompose<MultipoleKernel::long_wavelength>(const FieldGrid&,
                                                                                const Fields&,
                                                                                const Vec3d&);
extern template CartesianMultipoles decompose<MultipoleKernel::exact>(const FieldGrid&, const Vec3d&);
extern template CartesianMultipoles decompose<MultipoleKernel::long_wavelength>(const FieldGrid&,
                                                                                const Vec3d&);

struct MomentEfficiencies {
  double c_p = 0.0;
  double c_m = 0.0;
  double c_qe = 0.0;
  double c_qm = 0.0;
  double c_total = 0.0;
  double residual = 0.0;  // c_total minus the four partial terms

  double partial_sum() const { return c_p + c_m + c_qe + c_qm; }
};

/// Scattering efficiencies of the four moments, normalised by
/// `geometric_cross_section_nm2`:
///   C = k^4 / (6 pi eps0^2 |E0|^2) [ |p|^2 + |m/c|^2 + (|k Qe|^2 + |k Qm / c|^2) / 120 ].
/// When `total_cross_section_nm2` is given it becomes c_total and the
/// difference is reported as the residual; otherwise c_total is the partial sum.
MomentEfficiencies efficiencies(const CartesianMultipoles& mp, double k_per_nm, cplx e0,
                                double geometric_cross_section_nm2,
                                std::optional<double> total_cross_section_nm2 = std::nullopt);

/// Mie coefficients a1, b1, a2, b2 equivalent to the moments for a plane wave
/// travelling along +z with x polarisation:
///   a1 = -i k^3 p_x / (6 pi eps0 E0)          b1 = -i k^3 m_y / (6 pi eps0 c E0)
///   a2 =   -k^4 Qe_xz / (60 pi eps0 E0)       b2 = -k^4 Qm_yz / (60 pi eps0 c E0)
/// Throws DomainError for any other excitation or a zero amplitude.
MieCoefficients to_mie_moments(const CartesianMultipoles& mp, double k_per_nm, const PlaneWave& excitation);

}  // namespace kerker
