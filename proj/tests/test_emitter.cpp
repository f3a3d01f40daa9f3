#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kerker/dda.hpp"
#include "kerker/emitter.hpp"
#include "kerker/errors.hpp"

using namespace kerker;

namespace {

// Rate change from the image field acting back on the source, with the
// dipole field written term by term: 1 + 6 pi / k^3 Im(p* . E_image) / |p|^2.
double image_sum_rate(const Vec3d& p, double kd) {
  const double k = 1.0, r = 2.0 * kd;
  const Vec3d img(-p.x(), -p.y(), p.z());
  const Vec3d n(0.0, 0.0, -1.0);  // from image to source is +z; n.n terms are sign-blind
  const cplx e = std::exp(cplx(0.0, k * r));
  const Vec3c far = (k * k * (img - n * n.dot(img)) / r).cast<cplx>() * e;
  const Vec3c near = (3.0 * n * n.dot(img) - img).cast<cplx>() * (1.0 / (r * r * r) - cplx(0.0, k) / (r * r)) * e;
  const Vec3c field = (far + near) / (4.0 * kPi);
  return 1.0 + 6.0 * kPi / (k * k * k) * p.cast<cplx>().dot(field).imag() / p.squaredNorm();
}

FieldGrid lone_dipole(double wavelength, const Vec3c& moment, double height, std::optional<double> mirror) {
  FieldGrid g;
  g.points.resize(3, 0);
  g.volumes.resize(0);
  g.epsilon.resize(0);
  g.wavelength_nm = wavelength;
  g.source = PointDipole{Vec3d(0.0, 0.0, height), moment};
  g.mirror_z = mirror;
  return solve(g);
}

}  // namespace

TEST_CASE("photon budget chain") {
  const PhotonBudget unit = photon_budget(1.0, 1.0, 1.0, 1.0);
  CHECK(unit.collection_rate == 1.0);

  const PhotonBudget base = photon_budget(0.7, 31e-9, 1.0, 1.0);
  CHECK(base.base_rate == doctest::Approx(22.58e6).epsilon(1e-3));
  CHECK(base.printed_base_rate == 22e6);

  const PhotonBudget b = photon_budget(0.7, 31e-9, 300.0, 0.75);
  CHECK(b.printed_emission_rate == doctest::Approx(6.6e9).epsilon(1e-12));
  CHECK(b.printed_collection_rate == doctest::Approx(4.95e9).epsilon(1e-12));
  CHECK(b.emission_rate == doctest::Approx(0.7 / 31e-9 * 300.0));
  CHECK(b.collection_rate <= b.emission_rate);
  CHECK(format_budget(b).find("~ 5 GHz") != std::string::npos);

  // Linear in enhancement and in CE.
  CHECK(photon_budget(0.7, 31e-9, 600.0, 0.75).collection_rate == doctest::Approx(2.0 * b.collection_rate));
  CHECK(photon_budget(0.7, 31e-9, 300.0, 0.375).collection_rate == doctest::Approx(0.5 * b.collection_rate));

  CHECK_THROWS_AS(photon_budget(0.0, 31e-9, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(photon_budget(0.7, 31e-9, 1.0, 1.5), DomainError);
  CHECK_THROWS_AS(photon_budget(0.7, -1.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(photon_budget(0.7, 31e-9, 0.0, 1.0), DomainError);
}

TEST_CASE("closed-form g2") {
  const TwoLevelModel m = two_level_model(31e-9, 0.7, 0.0);
  CHECK(m.tau1() == doctest::Approx(31e-9));
  CHECK(g2(m, 0.0) == 0.0);
  CHECK(std::abs(g2(m, m.tau1()) - (1.0 - std::exp(-1.0))) < 1e-12);
  CHECK(g2(m, -5e-9) == g2(m, 5e-9));
  CHECK(g2(m, 0.0, 2) == 0.5);
  CHECK(g2(m, 0.0, 4) == 0.75);
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = g2(m, i * 2e-9);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(g2(m, 1e-5) == doctest::Approx(1.0));
  CHECK(g2_bin_average(m, 0.0, 1e-12) == doctest::Approx(0.0).epsilon(1e-4));

  const TwoLevelModel pumped{0.5e8, 1e8, 1.0};
  CHECK(pumped.tau1() <= pumped.tau0());
  CHECK_THROWS_AS((TwoLevelModel{-1.0, 1.0, 1.0}).validate(), DomainError);
  CHECK_THROWS_AS(two_level_model(0.0), DomainError);
}

TEST_CASE("enhanced decay narrows the anti-bunching dip") {
  const TwoLevelModel m = two_level_model(31e-9);
  const TwoLevelModel e = g2_enhanced(m, 300.0);
  CHECK(m.tau1() / e.tau1() == doctest::Approx(300.0));
  CHECK(e.tau1() == doctest::Approx(103.3e-12).epsilon(1e-3));
  CHECK(g2_enhanced(m, 1.0).k21 == m.k21);
  CHECK_THROWS_AS(g2_enhanced(m, 0.0), DomainError);
}

TEST_CASE("mirror closed forms agree with the image-dipole sum") {
  for (double kd = 0.2; kd <= 12.0; kd += 0.35) {
    CAPTURE(kd);
    CHECK(mirror_decay_rate_perpendicular(kd) == doctest::Approx(image_sum_rate(Vec3d::UnitZ(), kd)).epsilon(1e-10));
    CHECK(mirror_decay_rate_parallel(kd) == doctest::Approx(image_sum_rate(Vec3d::UnitX(), kd)).epsilon(1e-10));
  }
  CHECK(mirror_decay_rate_perpendicular(1e-3) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(mirror_decay_rate_parallel(1e-3) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK_THROWS_AS(mirror_decay_rate_perpendicular(0.0), DomainError);
}

TEST_CASE("vacuum against vacuum is unity") {
  const Vec3c p(0.0, 0.0, 1.0);
  const FieldGrid a = lone_dipole(680.0, p, 0.0, std::nullopt);
  const auto r = relative_decay_rate(a, a);
  CHECK(std::abs(r.relative_rate - 1.0) < 1e-2);
  CHECK(r.p_reference == doctest::Approx(dipole_power_free_space(p, a.wavenumber())).epsilon(1e-6));
  // Reference medium of index n radiates n times more.
  CHECK(relative_decay_rate(a, a, 1.05).relative_rate == doctest::Approx(1.0 / 1.05).epsilon(1e-6));
}

TEST_CASE("flux above a mirror reproduces the image-dipole rates") {
  const double lambda = 680.0, k = wavenumber(lambda);
  for (const Vec3c& p : {Vec3c(0.0, 0.0, 1.0), Vec3c(1.0, 0.0, 0.0)}) {
    const FieldGrid ref = lone_dipole(lambda, p, 0.0, std::nullopt);
    for (double kd : {0.5, 1.0, 2.0, 3.7, 6.0, 10.0}) {
      CAPTURE(kd);
      const FieldGrid g = lone_dipole(lambda, p, kd / k, 0.0);
      const double rate = relative_decay_rate(g, ref).relative_rate;
      const double expected = p.z() != 0.0 ? mirror_decay_rate_perpendicular(kd) : mirror_decay_rate_parallel(kd);
      CHECK(std::abs(rate / expected - 1.0) < 0.03);
    }
  }
}

TEST_CASE("relative rate does not depend on the dipole strength") {
  const double lambda = 600.0;
  const Vec3c p(0.0, 0.0, 1.0);
  const FieldGrid ref1 = lone_dipole(lambda, p, 0.0, std::nullopt);
  const FieldGrid ref2 = lone_dipole(lambda, cplx(3.0, -2.0) * p, 0.0, std::nullopt);
  const FieldGrid g1 = lone_dipole(lambda, p, 80.0, 0.0);
  const FieldGrid g2v = lone_dipole(lambda, cplx(3.0, -2.0) * p, 80.0, 0.0);
  CHECK(relative_decay_rate(g1, ref1).relative_rate ==
        doctest::Approx(relative_decay_rate(g2v, ref2).relative_rate).epsilon(1e-10));
  CHECK_THROWS_AS(relative_decay_rate(g1, ref2), DomainError);
}

TEST_CASE("Monte Carlo coincidences follow the closed form") {
  const TwoLevelModel m{0.1e8, 1e8, 1.0};
  HbtOptions o;
  o.duration_s = 0.2;
  o.bin_width_s = m.tau1() / 8.0;
  o.seed = 42;
  const HbtHistogram h = hbt_montecarlo(m, o);
  REQUIRE_FALSE(h.insufficient);
  CHECK(h.g2.size() == 40);
  int outside = 0;
  for (Eigen::Index i = 0; i < h.g2.size(); ++i) {
    const double ref = g2_bin_average(m, h.tau_lo[i], h.tau_hi[i]);
    if (std::abs(h.g2[i] - ref) > 3.0 * h.error[i]) ++outside;
  }
  CHECK(outside == 0);
  const AntibunchingFit fit = fit_antibunching(h);
  CHECK(fit.tau1 == doctest::Approx(m.tau1()).epsilon(0.03));
  CHECK(std::abs(fit.g2_zero) < 0.02);
  CHECK(fit.chi2_per_dof < 2.0);
}

TEST_CASE("Monte Carlo is reproducible for a fixed seed and any thread count") {
  const TwoLevelModel m{0.2e8, 1e8, 0.8};
  HbtOptions o;
  o.duration_s = 2e-3;
  o.bin_width_s = m.tau1() / 6.0;
  o.seed = 7;
  o.jitter_s = 1e-10;
  o.dead_time_s = 5e-9;
  const HbtHistogram a = hbt_montecarlo(m, o);
  o.threads = 3;
  const HbtHistogram b = hbt_montecarlo(m, o);
  CHECK(a.counts == b.counts);
  CHECK(a.g2 == b.g2);
  CHECK(a.sub_seeds == b.sub_seeds);
  o.seed = 8;
  CHECK(hbt_montecarlo(m, o).counts != a.counts);
}

TEST_CASE("two merged emitters give g2(0) near one half") {
  const TwoLevelModel m{0.1e8, 1e8, 1.0};
  HbtOptions o;
  o.duration_s = 0.05;
  o.bin_width_s = m.tau1() / 8.0;
  o.emitters = 2;
  o.seed = 3;
  const AntibunchingFit fit = fit_antibunching(hbt_montecarlo(m, o));
  CHECK(std::abs(fit.g2_zero - 0.5) < 0.02);
  CHECK(fit.tau1 == doctest::Approx(m.tau1()).epsilon(0.05));
}

TEST_CASE("Monte Carlo error falls as one over root duration") {
  const TwoLevelModel m{0.1e8, 1e8, 1.0};
  auto rms_deviation = [&](double duration) {
    double sum = 0.0;
    int n = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      HbtOptions o;
      o.duration_s = duration;
      o.bin_width_s = m.tau1() / 6.0;
      o.seed = seed;
      const HbtHistogram h = hbt_montecarlo(m, o);
      for (Eigen::Index i = 0; i < h.g2.size(); ++i) {
        const double d = h.g2[i] - g2_bin_average(m, h.tau_lo[i], h.tau_hi[i]);
        sum += d * d;
        ++n;
      }
    }
    return std::sqrt(sum / n);
  };
  const double ratio = rms_deviation(2e-3) / rms_deviation(8e-3);
  CHECK(ratio > 1.5);
  CHECK(ratio < 2.7);
}

TEST_CASE("Monte Carlo rejects unusable settings") {
  const TwoLevelModel m{0.1e8, 1e8, 1.0};
  HbtOptions o;
  o.duration_s = 1e-3;
  o.bin_width_s = m.tau1() / 2.0;
  CHECK_THROWS_AS(hbt_montecarlo(m, o), DomainError);
  o.bin_width_s = m.tau1() / 10.0;
  o.duration_s = 10.0 * m.tau1();
  CHECK_THROWS_AS(hbt_montecarlo(m, o), DomainError);
  o.duration_s = 1e-3;
  CHECK_THROWS_AS(hbt_montecarlo(TwoLevelModel{0.0, 1e8, 1.0}, o), DomainError);
  o.duration_s = 200.0 * m.tau1();
  o.chunks = 1;
  CHECK(hbt_montecarlo(m, o).insufficient);
}
