#include "kerker/emitter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include "kerker/errors.hpp"

namespace kerker {

DecayRateResult relative_decay_rate(const FieldGrid& antenna, const FieldGrid& reference, double reference_index,
                                    const FluxOptions& flux) {
  const auto* da = std::get_if<PointDipole>(&antenna.source);
  const auto* dr = std::get_if<PointDipole>(&reference.source);
  if (!da || !dr) throw DomainError("relative_decay_rate: both problems need a point-dipole source");
  if ((da->moment - dr->moment).norm() > 1e-12 * da->moment.norm())
    throw DomainError("relative_decay_rate: dipole moments differ");
  if (std::abs(antenna.wavelength_nm - reference.wavelength_nm) > 1e-12 * antenna.wavelength_nm)
    throw DomainError("relative_decay_rate: wavelengths differ");
  if (!(reference_index >= 1.0)) throw DomainError("relative_decay_rate: reference index must be >= 1");

  DecayRateResult r;
  r.p_antenna = radiated_power(antenna, flux);
  r.p_reference = reference_index * radiated_power(reference, flux);
  if (!(r.p_reference > 0.0)) {
    const SolveReport rep = reference.report.value_or(SolveReport{});
    throw ConvergenceError("relative_decay_rate: reference power is not positive", rep.residual, rep.iterations);
  }
  r.relative_rate = r.p_antenna / r.p_reference;
  return r;
}

double mirror_decay_rate_perpendicular(double kd) {
  if (!(kd > 0.0)) throw DomainError("mirror_decay_rate: distance must be positive");
  const double u = 2.0 * kd;
  return 1.0 + 3.0 * (std::sin(u) / (u * u * u) - std::cos(u) / (u * u));
}

double mirror_decay_rate_parallel(double kd) {
  if (!(kd > 0.0)) throw DomainError("mirror_decay_rate: distance must be positive");
  const double u = 2.0 * kd;
  return 1.0 - 1.5 * (std::sin(u) / u + std::cos(u) / (u * u) - std::sin(u) / (u * u * u));
}

void TwoLevelModel::validate() const {
  if (!(k21 > 0.0)) throw DomainError("TwoLevelModel: decay rate must be positive");
  if (!(k12 >= 0.0)) throw DomainError("TwoLevelModel: pump rate must be non-negative");
  if (!(qe_i >= 0.0 && qe_i <= 1.0)) throw DomainError("TwoLevelModel: quantum efficiency outside [0, 1]");
}

TwoLevelModel two_level_model(double tau0_s, double qe_i, double k12) {
  if (!(tau0_s > 0.0)) throw DomainError("two_level_model: lifetime must be positive");
  TwoLevelModel m{k12, 1.0 / tau0_s, qe_i};
  m.validate();
  return m;
}

PhotonBudget photon_budget(double qe_i, double tau0_s, double enhancement, double ce) {
  if (!(qe_i > 0.0 && qe_i <= 1.0)) throw DomainError("photon_budget: QE_i must lie in (0, 1]");
  if (!(ce > 0.0 && ce <= 1.0)) throw DomainError("photon_budget: CE must lie in (0, 1]");
  if (!(tau0_s > 0.0)) throw DomainError("photon_budget: lifetime must be positive");
  if (!(enhancement > 0.0)) throw DomainError("photon_budget: enhancement must be positive");
  PhotonBudget b;
  b.qe_i = qe_i;
  b.tau0_s = tau0_s;
  b.enhancement = enhancement;
  b.ce = ce;
  b.base_rate = qe_i / tau0_s;
  b.emission_rate = b.base_rate * enhancement;
  b.collection_rate = b.emission_rate * ce;
  // Whole MHz, but keep sub-MHz rates rather than truncating them to zero.
  b.printed_base_rate = b.base_rate >= 1e6 ? std::floor(b.base_rate / 1e6) * 1e6 : b.base_rate;
  b.printed_emission_rate = enhancement * b.printed_base_rate;
  b.printed_collection_rate = ce * b.printed_emission_rate;
  return b;
}

namespace {

std::string si_rate(double hz) {
  static const char* units[] = {"Hz", "kHz", "MHz", "GHz", "THz"};
  int u = 0;
  while (u < 4 && std::abs(hz) >= 1000.0) {
    hz /= 1000.0;
    ++u;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g %s", hz, units[u]);
  return buf;
}

double round_significant(double v, int digits) {
  if (v == 0.0) return 0.0;
  const double scale = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(v)))));
  return std::round(v * scale) / scale;
}

}  // namespace

std::string format_budget(const PhotonBudget& b) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "base rate        QE_i / tau0 = %g / %g ns = %s (quoted as %s)\n", b.qe_i,
                b.tau0_s * 1e9, si_rate(b.base_rate).c_str(), si_rate(b.printed_base_rate).c_str());
  out += buf;
  std::snprintf(buf, sizeof buf, "emission rate    %g x %s = %s (unrounded %s)\n", b.enhancement,
                si_rate(b.printed_base_rate).c_str(), si_rate(b.printed_emission_rate).c_str(),
                si_rate(b.emission_rate).c_str());
  out += buf;
  std::snprintf(buf, sizeof buf, "collection rate  %g x %s = %s ~ %s (unrounded %s)\n", b.ce,
                si_rate(b.printed_emission_rate).c_str(), si_rate(b.printed_collection_rate).c_str(),
                si_rate(round_significant(b.printed_collection_rate, 1)).c_str(),
                si_rate(b.collection_rate).c_str());
  out += buf;
  return out;
}

double g2(const TwoLevelModel& model, double tau_s) { return g2(model, tau_s, 1); }

double g2(const TwoLevelModel& model, double tau_s, int emitters) {
  if (emitters < 1) throw DomainError("g2: need at least one emitter");
  return 1.0 - std::exp(-std::abs(tau_s) / model.tau1()) / emitters;
}

double g2_bin_average(const TwoLevelModel& model, double lo_s, double hi_s, int emitters) {
  if (!(hi_s > lo_s) || lo_s < 0.0) throw DomainError("g2_bin_average: need 0 <= lo < hi");
  const double t1 = model.tau1();
  const double mean_exp = t1 / (hi_s - lo_s) * (std::exp(-lo_s / t1) - std::exp(-hi_s / t1));
  return 1.0 - mean_exp / emitters;
}

TwoLevelModel g2_enhanced(const TwoLevelModel& model, double rate_enhancement) {
  if (!(rate_enhancement > 0.0)) throw DomainError("g2_enhanced: enhancement must be positive");
  TwoLevelModel m = model;
  m.k21 *= rate_enhancement;
  return m;
}

namespace {

struct ChunkResult {
  std::vector<long long> counts;
  std::vector<double> expected;
  long long a = 0, b = 0;
  std::uint64_t seed = 0;
};

std::uint64_t sub_seed(std::uint64_t seed, int chunk, int emitter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(emitter)};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

void apply_dead_time(std::vector<double>& t, double dead) {
  if (dead <= 0.0 || t.empty()) return;
  std::size_t keep = 1;
  double last = t[0];
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] - last >= dead) last = t[keep++] = t[i];
  t.resize(keep);
}

ChunkResult run_chunk(const TwoLevelModel& model, const HbtOptions& o, int chunk, int n_bins, double width) {
  const double t_end = o.duration_s / o.chunks;
  std::vector<double> ta, tb;
  ChunkResult res;
  for (int e = 0; e < o.emitters; ++e) {
    const std::uint64_t s = sub_seed(o.seed, chunk, e);
    if (e == 0) res.seed = s;
    std::mt19937_64 rng(s);
    std::exponential_distribution<double> pump(model.k12), decay(model.k21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, o.jitter_s > 0.0 ? o.jitter_s : 1.0);
    double t = 0.0;
    for (;;) {
      t += pump(rng);
      t += decay(rng);
      if (t >= t_end) break;
      if (model.qe_i < 1.0 && u(rng) >= model.qe_i) continue;
      const bool to_a = u(rng) < 0.5;
      const double stamp = o.jitter_s > 0.0 ? t + jitter(rng) : t;
      (to_a ? ta : tb).push_back(stamp);
    }
  }
  if (o.emitters > 1 || o.jitter_s > 0.0) {
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
  }
  apply_dead_time(ta, o.dead_time_s);
  apply_dead_time(tb, o.dead_time_s);

  res.counts.assign(static_cast<std::size_t>(n_bins), 0);
  const double reach = n_bins * width;
  std::size_t first = 0;
  for (const double a : ta) {
    while (first < tb.size() && tb[first] <= a - reach) ++first;
    for (std::size_t j = first; j < tb.size() && tb[j] < a + reach; ++j) {
      const auto bin = static_cast<std::size_t>(std::abs(tb[j] - a) / width);
      if (bin < res.counts.size()) ++res.counts[bin];
    }
  }
  res.a = static_cast<long long>(ta.size());
  res.b = static_cast<long long>(tb.size());
  // Uncorrelated streams: N_A N_B / T^2 coincidences per unit delay, over an
  // overlap of T - |tau|, counted for both signs of the delay.
  res.expected.resize(static_cast<std::size_t>(n_bins));
  const double rate2 = static_cast<double>(res.a) * static_cast<double>(res.b) / (t_end * t_end);
  for (int i = 0; i < n_bins; ++i) {
    const double lo = i * width, hi = (i + 1) * width;
    res.expected[static_cast<std::size_t>(i)] = 2.0 * rate2 * (width * t_end - 0.5 * (hi * hi - lo * lo));
  }
  return res;
}

}  // namespace

HbtHistogram hbt_montecarlo(const TwoLevelModel& model, const HbtOptions& options) {
  model.validate();
  if (!(model.k12 > 0.0)) throw DomainError("hbt_montecarlo: pump rate must be positive to emit photons");
  const double t1 = model.tau1();
  HbtOptions o = options;
  if (o.max_delay_s <= 0.0) o.max_delay_s = 5.0 * t1;
  if (!(o.bin_width_s > 0.0 && o.bin_width_s < t1 / 5.0))
    throw DomainError("hbt_montecarlo: bin width must be positive and below tau1 / 5");
  if (!(o.duration_s >= 100.0 * t1)) throw DomainError("hbt_montecarlo: duration must be at least 100 tau1");
  if (o.emitters < 1 || o.chunks < 1) throw DomainError("hbt_montecarlo: emitters and chunks must be >= 1");
  if (o.dead_time_s < 0.0 || o.jitter_s < 0.0) throw DomainError("hbt_montecarlo: negative detector time");
  if (o.duration_s / o.chunks <= 2.0 * o.max_delay_s)
    throw DomainError("hbt_montecarlo: chunks too short for the delay range");

  const int n_bins = static_cast<int>(std::ceil(o.max_delay_s / o.bin_width_s - 1e-9));
  std::vector<ChunkResult> parts(static_cast<std::size_t>(o.chunks));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c; (c = next++) < o.chunks;) parts[static_cast<std::size_t>(c)] = run_chunk(model, o, c, n_bins, o.bin_width_s);
  };
  const int n_threads = std::clamp(o.threads, 1, o.chunks);
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  HbtHistogram h;
  h.tau_lo.resize(n_bins);
  h.tau_hi.resize(n_bins);
  h.counts = Eigen::VectorXd::Zero(n_bins);
  h.expected = Eigen::VectorXd::Zero(n_bins);
  for (const ChunkResult& p : parts) {  // fixed order keeps sums reproducible
    for (int i = 0; i < n_bins; ++i) {
      h.counts[i] += static_cast<double>(p.counts[static_cast<std::size_t>(i)]);
      h.expected[i] += p.expected[static_cast<std::size_t>(i)];
    }
    h.detections_a += p.a;
    h.detections_b += p.b;
    h.sub_seeds.push_back(p.seed);
  }
  h.g2.resize(n_bins);
  h.error.resize(n_bins);
  for (int i = 0; i < n_bins; ++i) {
    h.tau_lo[i] = i * o.bin_width_s;
    h.tau_hi[i] = (i + 1) * o.bin_width_s;
    const double e = h.expected[i] > 0.0 ? h.expected[i] : 1.0;
    h.g2[i] = h.counts[i] / e;
    h.error[i] = std::sqrt(std::max(h.counts[i], 1.0)) / e;
  }
  h.coincidences = static_cast<long long>(h.counts.sum());
  h.insufficient = h.coincidences < 10000;
  return h;
}

namespace {

struct FitAtTau {
  double chi2 = 0.0;
  double amplitude = 0.0;
  double amplitude_error = 0.0;
};

// For fixed tau1 the model is linear in the amplitude.
FitAtTau fit_amplitude(const HbtHistogram& h, double tau1) {
  double sff = 0.0, sfy = 0.0;
  const Eigen::Index n = h.g2.size();
  Eigen::VectorXd f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = h.tau_hi[i] - h.tau_lo[i];
    f[i] = tau1 / w * (std::exp(-h.tau_lo[i] / tau1) - std::exp(-h.tau_hi[i] / tau1));
    const double wt = 1.0 / (h.error[i] * h.error[i]);
    sff += wt * f[i] * f[i];
    sfy += wt * f[i] * (1.0 - h.g2[i]);
  }
  FitAtTau r;
  r.amplitude = sfy / sff;
  r.amplitude_error = 1.0 / std::sqrt(sff);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (h.g2[i] - (1.0 - r.amplitude * f[i])) / h.error[i];
    r.chi2 += d * d;
  }
  return r;
}

}  // namespace

AntibunchingFit fit_antibunching(const HbtHistogram& h) {
  const Eigen::Index n = h.g2.size();
  if (n < 3) throw DomainError("fit_antibunching: need at least three bins");
  // Coarse log scan, then golden-section refinement in log tau1.
  const double lo = std::log(h.tau_hi[0] * 0.05), hi = std::log(h.tau_hi[n - 1] * 5.0);
  const int scan = 200;
  int best = 0;
  double best_chi = INFINITY;
  for (int i = 0; i <= scan; ++i) {
    const double c = fit_amplitude(h, std::exp(lo + (hi - lo) * i / scan)).chi2;
    if (c < best_chi) best_chi = c, best = i;
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / scan;
  double b = lo + (hi - lo) * std::min(scan, best + 1) / scan;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = fit_amplitude(h, std::exp(x1)).chi2, f2 = fit_amplitude(h, std::exp(x2)).chi2;
  for (int it = 0; it < 100 && b - a > 1e-10; ++it) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - g * (b - a);
      f1 = fit_amplitude(h, std::exp(x1)).chi2;
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + g * (b - a);
      f2 = fit_amplitude(h, std::exp(x2)).chi2;
    }
  }
  AntibunchingFit fit;
  fit.tau1 = std::exp(0.5 * (a + b));
  const FitAtTau r = fit_amplitude(h, fit.tau1);
  fit.g2_zero = 1.0 - r.amplitude;
  fit.g2_zero_error = r.amplitude_error;
  fit.chi2_per_dof = n > 2 ? r.chi2 / static_cast<double>(n - 2) : 0.0;
  return fit;
}

}  // namespace kerker
