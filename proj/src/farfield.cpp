#include "kerker/farfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kerker/errors.hpp"
#include "kerker/specfun.hpp"

namespace kerker {

namespace {

Eigen::VectorXd theta_grid(int n) {
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t[i] = kPi * i / (n - 1);
  t[n - 1] = kPi;
  return t;
}

Eigen::VectorXd phi_grid(int n) {
  Eigen::VectorXd p(n);
  for (int j = 0; j < n; ++j) p[j] = 2.0 * kPi * j / n;
  return p;
}

void check_grid(int n_theta, int n_phi, int min_theta, int min_phi) {
  if (n_theta < min_theta || n_phi < min_phi) {
    std::ostringstream os;
    os << "pattern grid " << n_theta << " x " << n_phi << " below the minimum " << min_theta
       << " x " << min_phi;
    throw DomainError(os.str());
  }
}

// Integral over [0, t*h] of the quadratic through samples (f_m1, f_0, f_p1)
// at offsets -h, 0, +h.
double quadratic_partial(double f_m1, double f_0, double f_p1, double t, double h) {
  const double t2 = t * t, t3 = t2 * t;
  const double w_m1 = (t3 / 3.0 - t2 / 2.0) / 2.0;
  const double w_0 = t - t3 / 3.0;
  const double w_p1 = (t3 / 3.0 + t2 / 2.0) / 2.0;
  return h * (w_m1 * f_m1 + w_0 * f_0 + w_p1 * f_p1);
}

// Integral of uniformly sampled f (spacing h, f[0] at 0) over [0, upto].
double integrate_prefix(const Eigen::VectorXd& f, double h, double upto) {
  const int n = static_cast<int>(f.size());
  const double s = upto / h;
  int m = static_cast<int>(std::floor(s + 1e-9));
  m = std::clamp(m, 0, n - 1);
  const double t = std::max(0.0, s - m);

  double sum = 0.0;
  if (m >= 1) sum = simpson_weights(m + 1, h).dot(f.head(m + 1));
  if (t > 1e-12 && m + 1 < n) {
    if (m >= 1) {
      sum += quadratic_partial(f[m - 1], f[m], f[m + 1], t, h);
    } else {
      // Shift the stencil right: nodes 0, 1, 2 seen from node 1.
      sum += quadratic_partial(f[0], f[1], f[2], t - 1.0, h) -
             quadratic_partial(f[0], f[1], f[2], -1.0, h);
    }
  }
  return sum;
}

}  // namespace

Eigen::VectorXd simpson_weights(int n, double h) {
  if (n < 2) throw DomainError("simpson_weights: need at least two samples");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  const int intervals = n - 1;
  if (intervals == 1) {
    w[0] = w[1] = h / 2.0;
    return w;
  }
  int simpson_end = (intervals % 2 == 0) ? intervals : intervals - 3;
  for (int i = 0; i < simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (intervals % 2 == 1) {
    const int i = simpson_end;
    w[i] += 3.0 * h / 8.0;
    w[i + 1] += 9.0 * h / 8.0;
    w[i + 2] += 9.0 * h / 8.0;
    w[i + 3] += 3.0 * h / 8.0;
  }
  return w;
}

Eigen::VectorXd RadiationPattern::polar_profile() const {
  const double dphi = 2.0 * kPi / n_phi();
  Eigen::VectorXd f = intensity.rowwise().sum() * dphi;
  for (int i = 0; i < n_theta(); ++i) f[i] *= std::sin(theta[i]);
  return f;
}

double RadiationPattern::total_power() const {
  const double h = kPi / (n_theta() - 1);
  return simpson_weights(n_theta(), h).dot(polar_profile());
}

Eigen::VectorXd RadiationPattern::in_plane_cut() const { return intensity.col(0); }

Eigen::VectorXd RadiationPattern::out_of_plane_cut() const {
  if (n_phi() % 4 != 0) throw DomainError("out_of_plane_cut: N_phi must be a multiple of 4");
  return intensity.col(n_phi() / 4);
}

RadiationPattern make_pattern(int n_theta, int n_phi,
                              const std::function<double(double, double)>& f, double k0) {
  check_grid(n_theta, n_phi, 3, 1);
  RadiationPattern p;
  p.theta = theta_grid(n_theta);
  p.phi = phi_grid(n_phi);
  p.k0 = k0;
  p.intensity.resize(n_theta, n_phi);
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) p.intensity(i, j) = f(p.theta[i], p.phi[j]);
  return p;
}

ScatteringAmplitudes scattering_amplitudes(const MieCoefficients& c, double theta) {
  if (!(theta >= 0.0 && theta <= kPi)) throw DomainError("scattering_amplitudes: theta outside [0, pi]");
  const int n_max = c.n_max();
  if (n_max < 1) return {};
  std::vector<double> pi(n_max), tau(n_max);
  angular_functions_from_cos<double>(std::cos(theta), pi, tau);
  ScatteringAmplitudes s{};
  for (int n = 1; n <= n_max; ++n) {
    const double w = (2.0 * n + 1.0) / (n * (n + 1.0));
    s.s_par += w * (c.a[n - 1] * tau[n - 1] + c.b[n - 1] * pi[n - 1]);
    s.s_perp += w * (c.b[n - 1] * tau[n - 1] + c.a[n - 1] * pi[n - 1]);
  }
  return s;
}

RadiationPattern pattern(const MieCoefficients& c, int n_theta, int n_phi, double k0) {
  check_grid(n_theta, n_phi, 90, 4);
  RadiationPattern p;
  p.theta = theta_grid(n_theta);
  p.phi = phi_grid(n_phi);
  p.k0 = k0;
  p.intensity.resize(n_theta, n_phi);
  Eigen::VectorXd c2(n_phi), s2(n_phi);
  for (int j = 0; j < n_phi; ++j) {
    c2[j] = std::cos(p.phi[j]) * std::cos(p.phi[j]);
    s2[j] = std::sin(p.phi[j]) * std::sin(p.phi[j]);
  }
  // Exact zeros of cos/sin on the cut directions.
  for (int j = 0; j < n_phi; ++j) {
    if (4 * j == n_phi || 4 * j == 3 * n_phi) c2[j] = 0.0, s2[j] = 1.0;
    if (2 * j == n_phi || j == 0) c2[j] = 1.0, s2[j] = 0.0;
  }
  for (int i = 0; i < n_theta; ++i) {
    const auto s = scattering_amplitudes(c, p.theta[i]);
    const double par = std::norm(s.s_par), perp = std::norm(s.s_perp);
    p.intensity.row(i) = (c2 * par + s2 * perp).transpose();
  }
  return p;
}

KerkerMetrics kerker_metrics(const RadiationPattern& p) {
  KerkerMetrics m;
  m.total_power = p.total_power();
  if (!(m.total_power > 0.0)) throw DomainError("kerker_metrics: pattern carries no power");
  m.forward_intensity = p.intensity.row(0).mean();
  m.backward_intensity = p.intensity.row(p.n_theta() - 1).mean();
  m.front_back_ratio = m.backward_intensity > 0.0 ? m.forward_intensity / m.backward_intensity
                                                  : std::numeric_limits<double>::infinity();
  m.directivity = 4.0 * kPi * p.intensity.maxCoeff() / m.total_power;
  return m;
}

double objective_score(KerkerObjective objective, const KerkerMetrics& m) {
  switch (objective) {
    case KerkerObjective::min_backscatter:
      return 4.0 * kPi * m.backward_intensity / m.total_power;
    case KerkerObjective::max_directivity:
      return -m.directivity;
  }
  return 0.0;
}

SearchResult kerker_search(KerkerObjective objective, std::span<const Interval> domain,
                           const PatternEvaluator& evaluate, const SearchOptions& options) {
  if (domain.empty()) throw DomainError("kerker_search: empty domain");
  for (const auto& iv : domain)
    if (!(iv.lo <= iv.hi)) throw DomainError("kerker_search: interval with lo > hi");
  if (options.points_per_dim < 2 || options.rounds < 0 || !(options.zoom > 1.0))
    throw DomainError("kerker_search: invalid search options");

  const std::size_t dims = domain.size();
  std::vector<Interval> box(domain.begin(), domain.end());
  SearchResult result;
  bool have_best = false;

  auto better = [&](const SearchPoint& cand) {
    if (!have_best) return true;
    const double tol = 1e-12 * std::max(1.0, std::abs(result.best.score));
    if (cand.score < result.best.score - tol) return true;
    if (cand.score > result.best.score + tol) return false;
    return cand.params < result.best.params;
  };

  for (int round = 0; round <= options.rounds; ++round) {
    std::vector<int> idx(dims, 0);
    const int n = options.points_per_dim;
    bool done = false;
    while (!done) {
      SearchPoint pt;
      pt.params.resize(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        const auto& iv = box[d];
        pt.params[d] = iv.hi > iv.lo ? iv.lo + (iv.hi - iv.lo) * idx[d] / (n - 1) : iv.lo;
      }
      try {
        pt.metrics = kerker_metrics(evaluate(pt.params));
        pt.score = objective_score(objective, pt.metrics);
        if (better(pt)) {
          result.best = pt;
          have_best = true;
        }
        result.evaluated.push_back(std::move(pt));
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "[";
        for (std::size_t d = 0; d < dims; ++d) os << (d ? ", " : "") << pt.params[d];
        os << "]: " << e.what();
        result.failures.push_back(os.str());
      }
      // Odometer, last dimension fastest, so points arrive in lexicographic order.
      done = true;
      for (std::size_t d = dims; d-- > 0;) {
        if (++idx[d] < n) {
          done = false;
          break;
        }
        idx[d] = 0;
      }
    }
    if (!have_best) break;
    for (std::size_t d = 0; d < dims; ++d) {
      const double half = (box[d].hi - box[d].lo) / (2.0 * options.zoom);
      box[d].lo = std::max(domain[d].lo, result.best.params[d] - half);
      box[d].hi = std::min(domain[d].hi, result.best.params[d] + half);
    }
  }
  if (!have_best) throw DomainError("kerker_search: every point in the domain failed");
  return result;
}

RadiationPattern mix_emission(const RadiationPattern& p, MixMode mode, const MixWeights& weights) {
  if (p.n_phi() % 4 != 0) throw DomainError("mix_emission: N_phi must be a multiple of 4");
  RadiationPattern out = p;
  Eigen::VectorXd sym = weights.in_plane * p.in_plane_cut() +
                        (1.0 - weights.in_plane) * p.out_of_plane_cut();
  if (mode == MixMode::symmetrize_updown) {
    const Eigen::VectorXd mirrored = sym.reverse();
    sym = (1.0 - weights.downward) * sym + weights.downward * mirrored;
  }
  for (int j = 0; j < out.n_phi(); ++j) out.intensity.col(j) = sym;
  return out;
}

double collection_efficiency(const RadiationPattern& p, double numerical_aperture,
                             CollectionSide side) {
  if (!(numerical_aperture > 0.0 && numerical_aperture <= 1.0))
    throw DomainError("collection_efficiency: NA must lie in (0, 1]");
  const double theta_c = numerical_aperture == 1.0 ? kPi / 2.0 : std::asin(numerical_aperture);
  const double h = kPi / (p.n_theta() - 1);
  Eigen::VectorXd f = p.polar_profile();
  const double total = simpson_weights(p.n_theta(), h).dot(f);
  if (!(total > 0.0)) throw DomainError("collection_efficiency: pattern carries no power");
  if (side == CollectionSide::bottom) f.reverseInPlace();
  return integrate_prefix(f, h, theta_c) / total;
}

}  // namespace kerker
