#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "kerker/errors.hpp"
#include "kerker/farfield.hpp"

using namespace kerker;

namespace {

MieCoefficients moments(std::vector<cplx> a, std::vector<cplx> b) {
  return MieCoefficients::from_moments(std::move(a), std::move(b));
}

double max_cut_difference(const RadiationPattern& p) {
  return (p.in_plane_cut() - p.out_of_plane_cut()).cwiseAbs().maxCoeff() / p.intensity.maxCoeff();
}

// Independent oracle: adaptive Gauss-Kronrod on the polar integrand.
double cone_fraction_oracle(const std::function<double(double)>& f, double theta_c) {
  using boost::math::quadrature::gauss_kronrod;
  auto w = [&](double t) { return f(t) * std::sin(t); };
  return gauss_kronrod<double, 31>::integrate(w, 0.0, theta_c, 12, 1e-14) /
         gauss_kronrod<double, 31>::integrate(w, 0.0, kPi, 12, 1e-14);
}

}  // namespace

TEST_CASE("first Kerker: a1 = b1 cancels both amplitudes at theta = pi") {
  auto s = scattering_amplitudes(moments({1.0}, {1.0}), kPi);
  CHECK(std::abs(s.s_par) == 0.0);
  CHECK(std::abs(s.s_perp) == 0.0);
}

TEST_CASE("generalised Kerker endpoint amplitudes") {
  auto c = moments({1.0, 1.0}, {1.0, 1.0});
  auto f = scattering_amplitudes(c, 0.0);
  CHECK(f.s_par.real() == doctest::Approx(8.0));
  CHECK(f.s_perp.real() == doctest::Approx(8.0));
  auto b = scattering_amplitudes(c, kPi);
  CHECK(std::abs(b.s_par) == 0.0);
  CHECK(std::abs(b.s_perp) == 0.0);
}

TEST_CASE("electric dipole: in-plane cos^2, out-of-plane flat") {
  auto p = pattern(moments({1.0}, {0.0}));
  const auto in = p.in_plane_cut();
  const auto out = p.out_of_plane_cut();
  for (int i = 0; i < p.n_theta(); i += 37) {
    const double c = std::cos(p.theta[i]);
    CHECK(in[i] == doctest::Approx(2.25 * c * c));
    CHECK(out[i] == doctest::Approx(2.25));
  }
}

TEST_CASE("balanced moments give identical cuts and a phi-independent pattern") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<cplx> a;
    for (int n = 0; n < 4; ++n) a.emplace_back(u(rng), u(rng));
    auto p = pattern(moments(a, a));
    const double imax = p.intensity.maxCoeff();
    for (int i = 0; i < p.n_theta(); ++i) {
      const double spread = p.intensity.row(i).maxCoeff() - p.intensity.row(i).minCoeff();
      CHECK(spread <= 1e-12 * imax);
    }
    CHECK(p.intensity.row(p.n_theta() - 1).maxCoeff() <= 1e-20 * p.intensity(0, 0));
  }
}

TEST_CASE("near-balanced moments keep a dominant forward lobe") {
  auto p = pattern(moments({1.0, 1.0}, {1.0, 2.0}));
  Eigen::Index row, col;
  p.intensity.maxCoeff(&row, &col);
  CHECK(row == 0);
  CHECK(max_cut_difference(p) < 0.2);
  auto m = kerker_metrics(p);
  CHECK(m.front_back_ratio > 10.0);
}

TEST_CASE("Kerker metrics") {
  auto kerker = kerker_metrics(pattern(moments({1.0}, {1.0})));
  CHECK(kerker.backward_intensity <= 1e-20 * kerker.forward_intensity);
  CHECK(std::isinf(kerker.front_back_ratio));
  // I = (9/4)(1 + cos)^2: I_max = 9, P = 12 pi.
  CHECK(kerker.directivity == doctest::Approx(3.0).epsilon(1e-8));

  auto dipole = kerker_metrics(pattern(moments({1.0}, {0.0})));
  CHECK(dipole.front_back_ratio == doctest::Approx(1.0).epsilon(1e-12));

  // I(0) = 64, P = 2 pi sum (2n+1)(|a|^2 + |b|^2) = 32 pi.
  auto general = kerker_metrics(pattern(moments({1.0, 1.0}, {1.0, 1.0})));
  CHECK(general.directivity == doctest::Approx(8.0).epsilon(1e-8));
  CHECK(general.directivity > kerker.directivity);

  RadiationPattern zero = pattern(moments({0.0}, {0.0}));
  CHECK_THROWS_AS(kerker_metrics(zero), DomainError);
}

TEST_CASE("scale invariance of metrics and collection efficiency") {
  auto c = moments({cplx(0.3, 0.1), cplx(0.2, -0.4)}, {cplx(0.5, 0.0), cplx(-0.1, 0.3)});
  auto scaled = c;
  const cplx s(1.7, -2.2);
  for (auto& v : scaled.a) v *= s;
  for (auto& v : scaled.b) v *= s;
  auto p1 = pattern(c);
  auto p2 = pattern(scaled);
  CHECK((p2.intensity - std::norm(s) * p1.intensity).cwiseAbs().maxCoeff() <=
        1e-12 * p2.intensity.maxCoeff());
  auto m1 = kerker_metrics(p1), m2 = kerker_metrics(p2);
  CHECK(m1.directivity == doctest::Approx(m2.directivity).epsilon(1e-12));
  CHECK(m1.front_back_ratio == doctest::Approx(m2.front_back_ratio).epsilon(1e-12));
  CHECK(collection_efficiency(p1, 0.9) == doctest::Approx(collection_efficiency(p2, 0.9)).epsilon(1e-12));
}

TEST_CASE("integrated pattern reproduces the Mie scattering sum") {
  for (double x : {0.5, 1.0, 2.0}) {
    auto c = mie_coefficients(x, cplx(2.0, 0.1));
    const double k0 = 1.0;
    auto p = pattern(c, kDefaultThetaSamples, kDefaultPhiSamples, k0);
    double sum = 0.0;
    for (int n = 1; n <= c.n_max(); ++n)
      sum += (2 * n + 1) * (std::norm(c.a_n(n)) + std::norm(c.b_n(n)));
    const double sigma = 2.0 * kPi / (k0 * k0) * sum;
    CHECK(p.total_power() / (k0 * k0) == doctest::Approx(sigma).epsilon(1e-6));
  }
}

TEST_CASE("refining the theta grid changes the integral at Simpson order") {
  auto c = mie_coefficients(3.0, cplx(1.5, 0.0));
  double exact = 0.0;
  for (int n = 1; n <= c.n_max(); ++n)
    exact += 2.0 * kPi * (2 * n + 1) * (std::norm(c.a_n(n)) + std::norm(c.b_n(n)));
  const double e1 = std::abs(pattern(c, 91, 8).total_power() - exact);
  const double e2 = std::abs(pattern(c, 181, 8).total_power() - exact);
  CHECK(e2 < e1);
  CHECK(e1 / e2 > 8.0);  // fourth order would give 16
}

TEST_CASE("kerker_search finds the first Kerker line") {
  std::vector<Interval> box{{0.0, 2.0}, {0.0, 2.0}};
  auto eval = [](std::span<const double> v) {
    return pattern(moments({v[0], 0.0}, {v[1], 0.0}), 91, 8);
  };
  auto r = kerker_search(KerkerObjective::min_backscatter, box, eval);
  CHECK(r.best.params[0] == doctest::Approx(r.best.params[1]).epsilon(1e-12));
  CHECK(r.best.score <= 1e-20);
  // The all-zero corner carries no power and is skipped, not fatal.
  CHECK_FALSE(r.failures.empty());
}

TEST_CASE("kerker_search with tied moments: directivity is scale invariant") {
  std::vector<Interval> box{{0.1, 2.0}};
  auto eval = [](std::span<const double> v) {
    const double t = v[0];
    return pattern(moments({t, t}, {t, t}), 91, 8);
  };
  auto r = kerker_search(KerkerObjective::max_directivity, box, eval);
  for (const auto& pt : r.evaluated)
    CHECK(pt.metrics.directivity == doctest::Approx(r.best.metrics.directivity).epsilon(1e-12));
  // All ties: lexicographically smallest parameter wins.
  CHECK(r.best.params[0] == doctest::Approx(0.1));
}

TEST_CASE("kerker_search rejects an empty domain") {
  std::vector<Interval> none;
  auto eval = [](std::span<const double>) { return pattern(moments({1.0}, {1.0})); };
  CHECK_THROWS_AS(kerker_search(KerkerObjective::min_backscatter, none, eval), DomainError);
}

TEST_CASE("mix_emission") {
  auto p = pattern(moments({1.0, 0.4}, {0.2, cplx(0.1, 0.5)}));
  auto once = mix_emission(p, MixMode::average_cuts);
  auto twice = mix_emission(once, MixMode::average_cuts);
  CHECK((once.intensity - twice.intensity).cwiseAbs().maxCoeff() == 0.0);

  auto balanced = pattern(moments({1.0, 0.5}, {1.0, 0.5}));
  auto mixed = mix_emission(balanced, MixMode::average_cuts);
  CHECK((mixed.intensity - balanced.intensity).cwiseAbs().maxCoeff() <=
        1e-12 * balanced.intensity.maxCoeff());

  auto kerker = pattern(moments({1.0}, {1.0}));
  auto updown = mix_emission(kerker, MixMode::symmetrize_updown);
  const double peak = kerker.intensity(0, 0);
  CHECK(updown.intensity(0, 0) == doctest::Approx(peak / 2));
  CHECK(updown.intensity(updown.n_theta() - 1, 0) == doctest::Approx(peak / 2));

  RadiationPattern odd = make_pattern(91, 6, [](double, double) { return 1.0; });
  CHECK_THROWS_AS(mix_emission(odd, MixMode::average_cuts), DomainError);
}

TEST_CASE("collection efficiency of an isotropic source") {
  auto iso = make_pattern(kDefaultThetaSamples, kDefaultPhiSamples, [](double, double) { return 1.0; });
  const double expect = (1.0 - std::cos(std::asin(0.9))) / 2.0;
  CHECK(expect == doctest::Approx(0.28206).epsilon(1e-5));
  CHECK(std::abs(collection_efficiency(iso, 0.9) - expect) < 1e-3);
  CHECK(std::abs(collection_efficiency(iso, 0.9) - expect) < 1e-6);
}

TEST_CASE("collection efficiency of a z dipole against an independent quadrature") {
  auto sin2 = [](double t) { return std::sin(t) * std::sin(t); };
  auto p = make_pattern(kDefaultThetaSamples, kDefaultPhiSamples,
                        [&](double t, double) { return sin2(t); });
  for (double na : {0.3, 0.65, 0.9, 0.99}) {
    const double oracle = cone_fraction_oracle(sin2, std::asin(na));
    CHECK(std::abs(collection_efficiency(p, na) - oracle) < 1e-6);
  }
  const double tc = std::asin(0.9);
  const double closed = (2.0 - std::cos(tc) * (std::sin(tc) * std::sin(tc) + 2.0)) / 4.0;
  CHECK(cone_fraction_oracle(sin2, tc) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("collection efficiency of a narrow forward lobe approaches one") {
  auto lobe = make_pattern(kDefaultThetaSamples, 8,
                           [](double t, double) { return std::exp(-t * t / (2 * 0.05 * 0.05)); });
  CHECK(collection_efficiency(lobe, 0.9) > 0.999);
  CHECK(collection_efficiency(lobe, 0.9, CollectionSide::bottom) < 1e-12);
}

TEST_CASE("top and bottom hemispheres partition the power") {
  auto p = pattern(moments({cplx(0.7, 0.2), 0.3}, {0.1, cplx(0.0, 0.9)}));
  const double top = collection_efficiency(p, 1.0, CollectionSide::top);
  const double bottom = collection_efficiency(p, 1.0, CollectionSide::bottom);
  CHECK(top + bottom == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(collection_efficiency(p, 0.0), DomainError);
  CHECK_THROWS_AS(collection_efficiency(p, 1.2), DomainError);
}

TEST_CASE("pattern grid preconditions") {
  CHECK_THROWS_AS(pattern(moments({1.0}, {1.0}), 89, 4), DomainError);
  CHECK_THROWS_AS(pattern(moments({1.0}, {1.0}), 90, 3), DomainError);
  CHECK_NOTHROW(pattern(moments({1.0}, {1.0}), 90, 4));
}
