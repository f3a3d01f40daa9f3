#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kerker/errors.hpp"
#include "kerker/mie.hpp"

using namespace kerker;

namespace {
// Small-particle polarizability factor (m^2 - 1)/(m^2 + 2).
cplx rayleigh_factor(cplx m) { return (m * m - 1.0) / (m * m + 2.0); }
}  // namespace

TEST_CASE("Rayleigh limit of a_1 and b_1") {
  const double x = 0.01;
  const cplx m = 1.5;
  auto c = mie_coefficients(x, m);
  const cplx expect = -kI * (2.0 / 3.0) * x * x * x * rayleigh_factor(m);
  CHECK(std::abs(c.a_n(1) - expect) <= 0.01 * std::abs(expect));
  CHECK(std::abs(c.b_n(1)) < 1e-3 * std::abs(c.a_n(1)));
}

TEST_CASE("index-matched sphere scatters nothing") {
  for (double x : {0.3, 1.0, 4.0}) {
    auto c = mie_coefficients(x, 1.0);
    for (int n = 1; n <= c.n_max(); ++n) {
      CHECK(std::abs(c.a_n(n)) < 1e-14);
      CHECK(std::abs(c.b_n(n)) < 1e-14);
    }
    auto q = mie_efficiencies(c);
    CHECK(std::abs(q.q_sca) < 1e-14);
    CHECK(std::abs(q.q_ext) < 1e-14);
  }
}

TEST_CASE("lossless coefficients lie on the unitarity circle") {
  for (double x : {0.2, 1.0, 3.0, 8.0}) {
    for (double m : {1.33, 1.5, 2.5}) {
      auto c = mie_coefficients(x, m);
      for (int n = 1; n <= c.n_max(); ++n) {
        CHECK(std::abs(std::abs(c.a_n(n) - 0.5) - 0.5) < 1e-10);
        CHECK(std::abs(std::abs(c.b_n(n) - 0.5) - 0.5) < 1e-10);
      }
      CHECK(std::abs(mie_efficiencies(c).q_abs) < 1e-10);
    }
  }
}

TEST_CASE("Rayleigh scattering efficiency") {
  const double x = 0.01;
  const cplx m = 1.5;
  auto q = mie_efficiencies(mie_coefficients(x, m));
  const double expect = 8.0 / 3.0 * std::pow(x, 4) * std::norm(rayleigh_factor(m));
  CHECK(q.q_sca == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("optical theorem: forward amplitude equals the cross-section sum") {
  for (double x : {0.5, 1.0, 2.0, 6.0}) {
    for (cplx m : {cplx(1.5), cplx(2.0, 0.1), cplx(0.2, 3.0)}) {
      auto c = mie_coefficients(x, m);
      const double a = mie_efficiencies(c).q_ext;
      const double b = extinction_from_forward_amplitude(c);
      CHECK(std::abs(a - b) <= 1e-8 * std::abs(a));
    }
  }
}

TEST_CASE("absorbing sphere absorbs") {
  auto q = mie_efficiencies(mie_coefficients(1.0, cplx(2.0, 0.1)));
  CHECK(q.q_abs > 0.0);
}

TEST_CASE("extending n_max beyond Wiscombe leaves Q_sca unchanged") {
  for (double x : {0.5, 2.0, 10.0}) {
    const double base = mie_efficiencies(mie_coefficients(x, cplx(1.5, 0.01))).q_sca;
    const double more =
        mie_efficiencies(mie_coefficients(x, cplx(1.5, 0.01), wiscombe_order(x) + 15, 1.0)).q_sca;
    CHECK(std::abs(base - more) < 1e-10 * base);
  }
}

TEST_CASE("Mie domain and convergence errors") {
  CHECK_THROWS_AS(mie_coefficients(0.0, 1.5), DomainError);
  CHECK_THROWS_AS(mie_coefficients(-1.0, 1.5), DomainError);
  CHECK_THROWS_AS(mie_coefficients(1.0, cplx(1.5, -0.1)), DomainError);
  CHECK_THROWS_AS(mie_coefficients(5.0, 1.5, 2), ConvergenceError);
}

TEST_CASE("interior field of an index-matched sphere is the incident wave") {
  MieSphere s{100.0, 500.0, 1.0};
  SphereInteriorField field(s);
  const double k = wavenumber(500.0);
  for (Vec3d r : {Vec3d(0, 0, 0), Vec3d(20, -30, 40), Vec3d(-70, 10, -50), Vec3d(0, 0, 99)}) {
    const Vec3c e = field(r);
    const cplx expect = std::exp(kI * k * r.z());
    CHECK(std::abs(e.x() - expect) < 1e-10);
    CHECK(std::abs(e.y()) < 1e-10);
    CHECK(std::abs(e.z()) < 1e-10);
  }
}

TEST_CASE("interior field of a small sphere approaches 3/(m^2+2)") {
  const cplx m(2.0, 0.3);
  MieSphere s{1.0, 100000.0, m};
  SphereInteriorField field(s);
  const Vec3c e = field(Vec3d::Zero());
  const cplx expect = 3.0 / (m * m + 2.0);
  CHECK(std::abs(e.x() - expect) < 1e-4 * std::abs(expect));
  CHECK(std::abs(e.y()) < 1e-8);
  CHECK(std::abs(e.z()) < 1e-8);
  CHECK_THROWS_AS(field(Vec3d(0, 0, 1.0)), DomainError);
}

TEST_CASE("interior field varies smoothly through the centre") {
  MieSphere s{80.0, 600.0, 2.0};
  SphereInteriorField field(s);
  const Vec3c centre = field(Vec3d::Zero());
  const Vec3c near = field(Vec3d(1e-6, 1e-6, 1e-6));
  CHECK((centre - near).norm() < 1e-6);
}
