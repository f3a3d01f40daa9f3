#pragma once

// Discretised volume fields: sample positions, cell volumes, permittivity
// and (once solved) the complex electric field, plus the excitation that
// produced them. Lengths are in nm, fields in V/m for a unit-amplitude
// source. Dipole moments are stored as p / eps0, in (V/m) nm^3.

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "kerker/constants.hpp"
#include "kerker/types.hpp"

namespace kerker {

struct PlaneWave {
  Vec3d direction{0.0, 0.0, 1.0};
  Vec3c polarization{1.0, 0.0, 0.0};
  cplx amplitude{1.0, 0.0};

  /// +z propagation with x polarisation.
  bool is_canonical() const;
};

struct PointDipole {
  Vec3d position = Vec3d::Zero();
  Vec3c moment{0.0, 0.0, 1.0};  // p / eps0
};

using Source = std::variant<std::monostate, PlaneWave, PointDipole>;

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  std::size_t scatterers = 0;
  bool fft_accelerated = false;
};

struct FieldGrid {
  Points points;              // 3 x N, nm
  Eigen::VectorXd volumes;    // nm^3 per point
  Eigen::VectorXcd epsilon;   // relative permittivity per point
  Fields field;               // 3 x N, empty until solved
  Fields dipoles;             // 3 x N induced p / eps0, empty until solved
  double wavelength_nm = 0.0;
  Source source;
  // Perfect mirror filling z < mirror_z, modelled by image sources.
  std::optional<double> mirror_z;
  std::optional<SolveReport> report;

  Eigen::Index size() const { return points.cols(); }
  bool solved() const { return field.cols() == points.cols() && size() > 0; }
  double wavenumber() const { return kerker::wavenumber(wavelength_nm); }

  /// Indices of points whose permittivity differs from vacuum.
  std::vector<Eigen::Index> scatterer_indices() const;

  /// Throws DomainError on size mismatches, non-positive volumes or
  /// repeated points.
  void validate() const;
};

/// Incident field of the grid's source at r (image source included when a
/// mirror is present). Zero for std::monostate.
Vec3c incident_field(const FieldGrid& grid, const Vec3d& r);

/// Free-space dyadic Green tensor: E(r) = G(r) p/eps0 for a dipole at the origin.
Mat3c dyadic_green(const Vec3d& r, double k);

/// Z0 H(r) of a dipole p/eps0 at the origin.
Vec3c dipole_magnetic_field(const Vec3d& r, const Vec3c& moment, double k);

/// CSV with '#key=value' header lines and columns
/// x,y,z,cell_volume,eps_re,eps_im,Ex_re,Ex_im,Ey_re,Ey_im,Ez_re,Ez_im.
void write_field_grid_csv(std::ostream& os, const FieldGrid& grid);
FieldGrid read_field_grid_csv(std::istream& is);
void save_field_grid(const std::string& path, const FieldGrid& grid);
FieldGrid load_field_grid(const std::string& path);

}  // namespace kerker
