#include "kerker/dda.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kerker/errors.hpp"
#include "kerker/krylov.hpp"

namespace kerker {
namespace {

Vec3c image_moment(const Vec3c& p) { return Vec3c(-p.x(), -p.y(), p.z()); }

Vec3d image_point(const Vec3d& r, double mirror_z) { return Vec3d(r.x(), r.y(), 2.0 * mirror_z - r.z()); }

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2.0 * l - 1.0) * z * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    w[static_cast<std::size_t>(i)] = wi;
    w[static_cast<std::size_t>(n - 1 - i)] = wi;
  }
}

double incident_amplitude(const FieldGrid& grid) {
  const auto* pw = std::get_if<PlaneWave>(&grid.source);
  if (!pw) throw DomainError("cross sections need a plane-wave source");
  const double a = std::abs(pw->amplitude);
  if (a == 0.0) throw DomainError("cross sections need a non-zero incident amplitude");
  return a;
}

void require_solved(const FieldGrid& grid, const char* what) {
  if (!grid.solved() || grid.dipoles.cols() != grid.size())
    throw DomainError(std::string(what) + ": grid has not been solved");
}

}  // namespace

cplx clausius_mossotti(cplx epsilon, double volume) {
  return 3.0 * volume * (epsilon - 1.0) / (epsilon + 2.0);
}

cplx polarizability(cplx epsilon, double volume, double k) {
  const cplx a = clausius_mossotti(epsilon, volume);
  return a / (1.0 - kI * (k * k * k) * a / (6.0 * kPi));
}

FieldGrid solve(FieldGrid grid, const SolverOptions& options) {
  grid.validate();
  if (std::holds_alternative<std::monostate>(grid.source))
    throw DomainError("solve: no source set");
  if (grid.mirror_z && std::holds_alternative<PlaneWave>(grid.source))
    throw DomainError("solve: mirror images are only supported for a point-dipole source");
  const double k = grid.wavenumber();

  const auto scat = grid.scatterer_indices();
  const auto n_own = static_cast<Eigen::Index>(scat.size());
  const Eigen::Index n_sys = grid.mirror_z ? 2 * n_own : n_own;
  if (static_cast<std::size_t>(n_sys) > options.max_scatterers)
    throw DomainError("solve: " + std::to_string(n_sys) + " scatterers exceed the budget of " +
                      std::to_string(options.max_scatterers));

  Points pos(3, n_sys);
  Eigen::VectorXcd alpha(n_sys);
  for (Eigen::Index s = 0; s < n_own; ++s) {
    const Eigen::Index i = scat[static_cast<std::size_t>(s)];
    pos.col(s) = grid.points.col(i);
    alpha[s] = polarizability(grid.epsilon[i], grid.volumes[i], k);
    if (grid.mirror_z) {
      pos.col(n_own + s) = image_point(grid.points.col(i), *grid.mirror_z);
      alpha[n_own + s] = alpha[s];
      if (pos(2, s) <= *grid.mirror_z) throw DomainError("solve: scatterer behind the mirror");
    }
  }

  Fields e_inc(3, n_sys);
  for (Eigen::Index s = 0; s < n_sys; ++s) e_inc.col(s) = incident_field(grid, pos.col(s));

  SolveReport report;
  report.scatterers = static_cast<std::size_t>(n_sys);
  Fields p = Fields::Zero(3, n_sys);
  if (n_sys > 0) {
    std::unique_ptr<DipoleInteraction> op;
    if (options.allow_fft && n_sys > 1) {
      try {
        op = make_fft_interaction(pos, k);
      } catch (const DomainError&) {
        op.reset();
      }
    }
    if (!op) op = make_direct_interaction(pos, k);
    report.fft_accelerated = op->fft_accelerated();

    Fields q(3, n_sys), gq(3, n_sys);
    auto apply = [&](const auto& v, Eigen::VectorXcd& out) {
      for (Eigen::Index s = 0; s < n_sys; ++s)
        for (int a = 0; a < 3; ++a) q(a, s) = alpha[s] * v[3 * s + a];
      op->apply(q, gq);
      out.resize(3 * n_sys);
      for (Eigen::Index s = 0; s < n_sys; ++s)
        for (int a = 0; a < 3; ++a) out[3 * s + a] = v[3 * s + a] - gq(a, s);
    };
    const Eigen::VectorXcd b = Eigen::Map<const Eigen::VectorXcd>(e_inc.data(), 3 * n_sys);
    Eigen::VectorXcd x = b;
    const GmresResult res = gmres(apply, b, x, options.restart, options.max_iterations, options.tolerance);
    report.iterations = res.iterations;
    report.residual = res.residual;
    if (!res.converged)
      throw ConvergenceError("solve: GMRES stopped at relative residual " + std::to_string(res.residual),
                             res.residual, res.iterations);
    for (Eigen::Index s = 0; s < n_sys; ++s)
      for (int a = 0; a < 3; ++a) p(a, s) = alpha[s] * x[3 * s + a];
  }

  const Eigen::Index n = grid.size();
  grid.dipoles = Fields::Zero(3, n);
  grid.field.resize(3, n);
  for (Eigen::Index s = 0; s < n_own; ++s) {
    const Eigen::Index i = scat[static_cast<std::size_t>(s)];
    grid.dipoles.col(i) = p.col(s);
    grid.field.col(i) = p.col(s) / (grid.volumes[i] * (grid.epsilon[i] - 1.0));
  }
  grid.report = report;

  // Vacuum points: incident plus every induced dipole.
  std::vector<Eigen::Index> vacuum;
  for (Eigen::Index i = 0; i < n; ++i)
    if (grid.epsilon[i] == cplx(1.0, 0.0)) vacuum.push_back(i);
  for (Eigen::Index i : vacuum) {
    Vec3c e = incident_field(grid, grid.points.col(i));
    for (Eigen::Index s = 0; s < n_sys; ++s) e += dyadic_green(grid.points.col(i) - pos.col(s), k) * p.col(s);
    grid.field.col(i) = e;
  }
  return grid;
}

Fields induced_current(const FieldGrid& grid) {
  if (!grid.solved()) throw DomainError("induced_current: field not populated");
  const double omega = angular_frequency(grid.wavelength_nm);
  Fields j(3, grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    j.col(i) = (kTimeSign * kI * omega * kEpsilon0 * (grid.epsilon[i] - 1.0)) * grid.field.col(i);
  return j;
}

Radiators radiators(const FieldGrid& grid, bool include_source) {
  std::vector<Vec3d> pos;
  std::vector<Vec3c> mom;
  auto add = [&](const Vec3d& r, const Vec3c& p) {
    pos.push_back(r);
    mom.push_back(p);
    if (grid.mirror_z) {
      pos.push_back(image_point(r, *grid.mirror_z));
      mom.push_back(image_moment(p));
    }
  };
  if (grid.dipoles.cols() == grid.size()) {
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      if (grid.epsilon[i] != cplx(1.0, 0.0)) add(grid.points.col(i), grid.dipoles.col(i));
  }
  if (include_source) {
    if (const auto* pd = std::get_if<PointDipole>(&grid.source)) add(pd->position, pd->moment);
  }
  Radiators r;
  r.positions.resize(3, static_cast<Eigen::Index>(pos.size()));
  r.moments.resize(3, static_cast<Eigen::Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) {
    r.positions.col(static_cast<Eigen::Index>(i)) = pos[i];
    r.moments.col(static_cast<Eigen::Index>(i)) = mom[i];
  }
  return r;
}

FieldSamples evaluate_fields(const FieldGrid& grid, const Points& at) {
  const double k = grid.wavenumber();
  const bool emission = std::holds_alternative<PointDipole>(grid.source);
  const Radiators rad = radiators(grid, emission);
  const PlaneWave* pw = std::get_if<PlaneWave>(&grid.source);

  FieldSamples out;
  out.e = Fields::Zero(3, at.cols());
  out.h = Fields::Zero(3, at.cols());
  for (Eigen::Index i = 0; i < at.cols(); ++i) {
    const Vec3d r = at.col(i);
    Vec3c e = Vec3c::Zero(), h = Vec3c::Zero();
    if (pw) {
      e = incident_field(grid, r);
      h = cross(pw->direction.normalized().cast<cplx>(), e);
    }
    for (Eigen::Index s = 0; s < rad.positions.cols(); ++s) {
      const Vec3d d = r - rad.positions.col(s);
      if (d.norm() == 0.0) throw DomainError("evaluate_fields: point coincides with a radiator");
      e += dyadic_green(d, k) * rad.moments.col(s);
      h += dipole_magnetic_field(d, rad.moments.col(s), k);
    }
    out.e.col(i) = e;
    out.h.col(i) = h;
  }
  return out;
}

double extinction_cross_section(const FieldGrid& grid) {
  require_solved(grid, "extinction_cross_section");
  const double e0 = incident_amplitude(grid);
  const double k = grid.wavenumber();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (grid.epsilon[i] == cplx(1.0, 0.0)) continue;
    sum += incident_field(grid, grid.points.col(i)).dot(grid.dipoles.col(i)).imag();
  }
  return k * sum / (e0 * e0);
}

double absorption_cross_section(const FieldGrid& grid) {
  require_solved(grid, "absorption_cross_section");
  const double e0 = incident_amplitude(grid);
  const double k = grid.wavenumber();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (grid.epsilon[i] == cplx(1.0, 0.0)) continue;
    const cplx inv = 1.0 / clausius_mossotti(grid.epsilon[i], grid.volumes[i]);
    sum += grid.dipoles.col(i).squaredNorm() * (-inv.imag());
  }
  return k * sum / (e0 * e0);
}

RadiationPattern far_field(const FieldGrid& grid, int n_theta, int n_phi) {
  if (n_theta < 3 || n_phi < 1) throw DomainError("far_field: grid too small");
  const bool emission = std::holds_alternative<PointDipole>(grid.source);
  if (!emission) require_solved(grid, "far_field");
  double norm = 1.0;
  if (const auto* pw = std::get_if<PlaneWave>(&grid.source)) norm = std::norm(pw->amplitude);
  if (norm == 0.0) throw DomainError("far_field: zero incident amplitude");
  const double k = grid.wavenumber();
  const Radiators rad = radiators(grid, emission);
  const double pref = k * k / (4.0 * kPi);

  auto f = [&](double theta, double phi) {
    if (grid.mirror_z && std::cos(theta) < -1e-12) return 0.0;
    const Vec3d n(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    Vec3c sum = Vec3c::Zero();
    for (Eigen::Index s = 0; s < rad.positions.cols(); ++s)
      sum += std::polar(1.0, -k * n.dot(rad.positions.col(s))) * rad.moments.col(s);
    const Vec3c nc = n.cast<cplx>();
    const Vec3c transverse = sum - nc * nc.dot(sum);  // (I - n n) sum; n is real
    return k * k * pref * pref * transverse.squaredNorm() / norm;
  };
  return make_pattern(n_theta, n_phi, f, k);
}

double scattering_cross_section(const FieldGrid& grid, int n_theta, int n_phi) {
  require_solved(grid, "scattering_cross_section");
  incident_amplitude(grid);
  const RadiationPattern p = far_field(grid, n_theta, n_phi);
  return p.total_power() / (p.k0 * p.k0);
}

double dipole_power_free_space(const Vec3c& moment, double k) {
  return std::pow(k, 4) * moment.squaredNorm() / (12.0 * kPi * kZ0);
}

double radiated_power(const FieldGrid& grid, const FluxOptions& options) {
  const Radiators rad = radiators(grid, std::holds_alternative<PointDipole>(grid.source));
  if (!std::holds_alternative<PointDipole>(grid.source))
    throw DomainError("radiated_power: needs a point-dipole source");
  const double k = grid.wavenumber();

  Vec3d centre = rad.positions.rowwise().mean();
  if (grid.mirror_z) centre.z() = *grid.mirror_z;
  double a = 0.0;
  for (Eigen::Index s = 0; s < rad.positions.cols(); ++s)
    a = std::max(a, (rad.positions.col(s) - centre).norm());
  const double radius = options.radius_nm.value_or(std::max(3.0 * a, grid.wavelength_nm));
  if (!(radius > a)) throw DomainError("radiated_power: sphere does not enclose the radiators");
  const int n_theta =
      options.n_theta.value_or(std::max(26, static_cast<int>(std::ceil(2.0 * k * a)) + 16));
  const int n_phi = 2 * n_theta;

  std::vector<double> mu, w;
  gauss_legendre(n_theta, mu, w);
  Points at(3, static_cast<Eigen::Index>(n_theta) * n_phi);
  Eigen::VectorXd weight(at.cols());
  Points normal(3, at.cols());
  Eigen::Index c = 0;
  for (int i = 0; i < n_theta; ++i) {
    const double st = std::sqrt(std::max(0.0, 1.0 - mu[i] * mu[i]));
    for (int j = 0; j < n_phi; ++j, ++c) {
      const double phi = 2.0 * kPi * j / n_phi;
      const Vec3d n(st * std::cos(phi), st * std::sin(phi), mu[i]);
      normal.col(c) = n;
      at.col(c) = centre + radius * n;
      weight[c] = w[i] * (2.0 * kPi / n_phi) * radius * radius;
    }
  }
  const FieldSamples f = evaluate_fields(grid, at);
  double flux = 0.0;
  for (Eigen::Index i = 0; i < at.cols(); ++i) {
    const Vec3c s = cross(f.e.col(i), f.h.col(i).conjugate());
    flux += weight[i] * 0.5 * s.real().dot(normal.col(i));
  }
  flux /= kZ0;
  return grid.mirror_z ? 0.5 * flux : flux;
}

}  // namespace kerker
