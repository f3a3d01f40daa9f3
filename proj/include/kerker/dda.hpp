#pragma once

// Coupled-dipole volume solver. Every point with eps != 1 is a polarisable
// dipole; the exciting field x at each one solves
//   x_s - sum_{t != s} G(r_s - r_t) alpha_t x_t = E_inc(r_s)
// with alpha the Clausius-Mossotti polarisability plus radiative reaction.
// A mirror is handled by adding image voxels and an image source and
// solving in free space.

#include <cstddef>
#include <memory>
#include <optional>

#include "kerker/farfield.hpp"
#include "kerker/field_grid.hpp"

namespace kerker {

struct SolverOptions {
  int max_iterations = 2000;
  double tolerance = 1e-6;
  int restart = 40;
  std::size_t max_scatterers = 400000;  // counted after adding mirror images
  bool allow_fft = true;
};

/// Clausius-Mossotti polarisability 3 V (eps - 1)/(eps + 2), nm^3.
cplx clausius_mossotti(cplx epsilon, double volume);
/// With radiative reaction: a / (1 - i k^3 a / (6 pi)).
cplx polarizability(cplx epsilon, double volume, double k);

/// y_s = sum_{t != s} G(r_s - r_t) q_t for a fixed set of positions.
class DipoleInteraction {
 public:
  virtual ~DipoleInteraction() = default;
  virtual void apply(const Fields& q, Fields& y) const = 0;
  virtual bool fft_accelerated() const = 0;
};

std::unique_ptr<DipoleInteraction> make_direct_interaction(const Points& positions, double k);
/// Throws DomainError when the positions do not sit on a common cubic lattice.
std::unique_ptr<DipoleInteraction> make_fft_interaction(const Points& positions, double k);

/// Returns the grid with `field` and `dipoles` filled. Scatterer points
/// carry the macroscopic field p / (V (eps - 1)); vacuum points the total
/// field. Throws DomainError without a source, for a plane wave with a
/// mirror, over budget or for overlapping points; ConvergenceError when
/// the iteration limit is reached.
FieldGrid solve(FieldGrid grid, const SolverOptions& options = {});

/// J = -i omega eps0 (eps - 1) E in A/m^2 (zero where eps = 1).
Fields induced_current(const FieldGrid& grid);

/// Induced dipoles (p / eps0), mirror images, and for emission problems
/// the source dipole with its image.
struct Radiators {
  Points positions;
  Fields moments;
};
Radiators radiators(const FieldGrid& grid, bool include_source);

/// Total E and Z0 H at points away from every radiator.
struct FieldSamples {
  Fields e;
  Fields h;  // Z0 H
};
FieldSamples evaluate_fields(const FieldGrid& grid, const Points& at);

/// Cross sections in nm^2 for plane-wave excitation.
double extinction_cross_section(const FieldGrid& grid);
double absorption_cross_section(const FieldGrid& grid);
double scattering_cross_section(const FieldGrid& grid, int n_theta = 181, int n_phi = 72);

/// Far-field intensity k^2 |F|^2 / |E0|^2 with F the scattered amplitude
/// (plane wave) or the total radiated amplitude (point dipole). With a
/// mirror the half space behind it is dark.
RadiationPattern far_field(const FieldGrid& grid, int n_theta = 181, int n_phi = 72);

struct FluxOptions {
  std::optional<double> radius_nm;  // default max(3 * bounding radius, wavelength)
  std::optional<int> n_theta;       // default max(26, ceil(2 k a) + 16)
};

/// Time-averaged power through a closed sphere around all radiators, in
/// units of (V/m)^2 nm^2 / Ohm. For a mirror, half the full-space flux.
double radiated_power(const FieldGrid& grid, const FluxOptions& options = {});

/// k^4 |p|^2 / (12 pi Z0) for p / eps0 in free space, same units.
double dipole_power_free_space(const Vec3c& moment, double k);

}  // namespace kerker
