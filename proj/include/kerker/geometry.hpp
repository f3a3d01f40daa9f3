#pragma once

#include <optional>

#include "kerker/field_grid.hpp"
#include "kerker/materials.hpp"

namespace kerker {

struct Reflector {
  double thickness_nm = 100.0;
  double spacing_nm = 0.0;  // gap between the lower cylinder face and the slab top
};

/// Two identical metal cylinders along z sandwiching a dielectric gap layer
/// centred at the origin, with an optional spherical emitter host in the gap.
struct AntennaGeometry {
  double length_nm = 340.0;
  double diameter_nm = 310.0;
  double gap_nm = 40.0;
  double emitter_nm = 30.0;  // 0 omits the emitter host
  Material metal = PermittivityTable::silver();
  cplx gap_permittivity{2.25, 0.0};
  cplx emitter_permittivity{5.76, 0.0};
  std::optional<Reflector> reflector;

  void validate() const;
  /// z of the reflecting plane, when a reflector is present.
  std::optional<double> mirror_z() const;
};

/// Cubic lattice with voxel centres at half-integer multiples of the
/// resolution, so the origin is a lattice corner. A voxel belongs to the
/// structure when its centre lies inside a cylinder or the gap layer; the
/// emitter host overrides the gap material. Requires
/// resolution <= min(D, gap) / 4.
FieldGrid voxelize(const AntennaGeometry& g, double resolution_nm, double wavelength_nm);

enum class SphereVoxelization {
  lattice,        // cubic voxels of edge d with N d^3 equal to the sphere volume
  volume_matched  // lattice positions inside the sphere, weights V / N
};

/// Homogeneous sphere centred at the origin with `voxels_per_radius` lattice
/// spacings across its radius.
FieldGrid voxelize_sphere(double radius_nm, int voxels_per_radius, cplx epsilon,
                          double wavelength_nm,
                          SphereVoxelization mode = SphereVoxelization::lattice);

}  // namespace kerker
