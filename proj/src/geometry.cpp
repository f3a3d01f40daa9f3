#include "kerker/geometry.hpp"

#include <cmath>
#include <vector>

#include "kerker/errors.hpp"

namespace kerker {

void AntennaGeometry::validate() const {
  if (!(length_nm > 0.0 && diameter_nm > 0.0 && gap_nm > 0.0))
    throw DomainError("AntennaGeometry: length, diameter and gap must be positive");
  if (!(emitter_nm >= 0.0)) throw DomainError("AntennaGeometry: emitter size must be >= 0");
  if (emitter_nm > gap_nm || emitter_nm > diameter_nm)
    throw DomainError("AntennaGeometry: emitter does not fit inside the gap layer");
  if (reflector && !(reflector->spacing_nm >= 0.0 && reflector->thickness_nm > 0.0))
    throw DomainError("AntennaGeometry: reflector spacing must be >= 0 and thickness > 0");
}

std::optional<double> AntennaGeometry::mirror_z() const {
  if (!reflector) return std::nullopt;
  return -(0.5 * gap_nm + length_nm) - reflector->spacing_nm;
}

FieldGrid voxelize(const AntennaGeometry& g, double resolution_nm, double wavelength_nm) {
  g.validate();
  const double h = resolution_nm;
  if (!(h > 0.0)) throw DomainError("voxelize: resolution must be positive");
  if (h > std::min(g.diameter_nm, g.gap_nm) / 4.0 * (1.0 + 1e-12))
    throw DomainError("voxelize: resolution coarser than min(D, gap) / 4");
  if (!(wavelength_nm > 0.0)) throw DomainError("voxelize: wavelength must be positive");

  const double radius = 0.5 * g.diameter_nm;
  const double half_gap = 0.5 * g.gap_nm;
  const double top = half_gap + g.length_nm;
  const double emitter_r = 0.5 * g.emitter_nm;
  const cplx metal = g.metal.at(wavelength_nm);

  const int nxy = static_cast<int>(std::ceil(radius / h));
  const int nz = static_cast<int>(std::ceil(top / h));
  std::vector<Vec3d> pts;
  std::vector<cplx> eps;
  for (int k = -nz; k < nz; ++k) {
    const double z = (k + 0.5) * h;
    const double az = std::abs(z);
    if (az > top) continue;
    for (int j = -nxy; j < nxy; ++j) {
      const double y = (j + 0.5) * h;
      for (int i = -nxy; i < nxy; ++i) {
        const double x = (i + 0.5) * h;
        if (x * x + y * y > radius * radius) continue;
        cplx e = metal;
        if (az < half_gap) {
          e = (x * x + y * y + z * z <= emitter_r * emitter_r) ? g.emitter_permittivity
                                                                : g.gap_permittivity;
        }
        pts.emplace_back(x, y, z);
        eps.push_back(e);
      }
    }
  }

  FieldGrid grid;
  const auto n = static_cast<Eigen::Index>(pts.size());
  grid.points.resize(3, n);
  grid.epsilon.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    grid.points.col(i) = pts[static_cast<std::size_t>(i)];
    grid.epsilon[i] = eps[static_cast<std::size_t>(i)];
  }
  grid.volumes = Eigen::VectorXd::Constant(n, h * h * h);
  grid.wavelength_nm = wavelength_nm;
  grid.mirror_z = g.mirror_z();
  return grid;
}

FieldGrid voxelize_sphere(double radius_nm, int voxels_per_radius, cplx epsilon,
                          double wavelength_nm, SphereVoxelization mode) {
  if (!(radius_nm > 0.0) || voxels_per_radius < 1 || !(wavelength_nm > 0.0))
    throw DomainError("voxelize_sphere: radius, resolution and wavelength must be positive");
  const double h = radius_nm / voxels_per_radius;
  const int n = voxels_per_radius;
  std::vector<Vec3d> pts;
  for (int k = -n; k < n; ++k)
    for (int j = -n; j < n; ++j)
      for (int i = -n; i < n; ++i) {
        const Vec3d r((i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h);
        if (r.squaredNorm() <= radius_nm * radius_nm) pts.push_back(r);
      }
  const auto count = static_cast<Eigen::Index>(pts.size());
  const double volume = 4.0 / 3.0 * kPi * radius_nm * radius_nm * radius_nm;
  const double cell = volume / static_cast<double>(count);
  const double scale = mode == SphereVoxelization::lattice ? std::cbrt(cell) / h : 1.0;

  FieldGrid grid;
  grid.points.resize(3, count);
  for (Eigen::Index i = 0; i < count; ++i) grid.points.col(i) = scale * pts[static_cast<std::size_t>(i)];
  grid.volumes = Eigen::VectorXd::Constant(count, cell);
  grid.epsilon = Eigen::VectorXcd::Constant(count, epsilon);
  grid.wavelength_nm = wavelength_nm;
  return grid;
}

}  // namespace kerker
