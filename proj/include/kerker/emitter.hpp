#pragma once

// Emitter figures of merit: decay-rate enhancement from radiated powers,
// the photon-rate budget and two-level photon statistics.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kerker/dda.hpp"
#include "kerker/field_grid.hpp"

namespace kerker {

struct DecayRateResult {
  double p_antenna = 0.0;
  double p_reference = 0.0;
  double relative_rate = 0.0;  // p_antenna / p_reference
};

/// Power ratio of two solved point-dipole problems. The reference grid is
/// taken to sit in a homogeneous medium of `reference_index`; a dipole of
/// fixed moment radiates n times its vacuum power there, so the reference
/// flux is scaled by n. Throws DomainError when the sources differ, and
/// ConvergenceError when the reference power is not positive.
DecayRateResult relative_decay_rate(const FieldGrid& antenna, const FieldGrid& reference,
                                    double reference_index = 1.0, const FluxOptions& flux = {});

/// Decay rate of a dipole a distance d above a perfect mirror, relative to
/// free space, as a function of kd.
double mirror_decay_rate_perpendicular(double kd);
double mirror_decay_rate_parallel(double kd);

struct TwoLevelModel {
  double k12 = 0.0;  // pump rate, 1/s
  double k21 = 0.0;  // decay rate, 1/s
  double qe_i = 1.0;  // intrinsic quantum efficiency

  double tau1() const { return 1.0 / (k12 + k21); }  // anti-bunching time
  double tau0() const { return 1.0 / k21; }          // lifetime
  /// Throws DomainError unless k21 > 0, k12 >= 0 and qe_i in [0, 1].
  void validate() const;
};

/// Model with lifetime tau0 and pump k12.
TwoLevelModel two_level_model(double tau0_s, double qe_i = 1.0, double k12 = 0.0);

struct PhotonBudget {
  double qe_i = 0.0;
  double tau0_s = 0.0;
  double base_rate = 0.0;  // qe_i / tau0
  double enhancement = 1.0;
  double ce = 1.0;
  double emission_rate = 0.0;    // base_rate * enhancement
  double collection_rate = 0.0;  // emission_rate * ce

  // The same chain with the base rate truncated to whole MHz before it is
  // multiplied out, which is how the figures are usually quoted.
  double printed_base_rate = 0.0;
  double printed_emission_rate = 0.0;
  double printed_collection_rate = 0.0;
};

/// Throws DomainError unless tau0 > 0, enhancement > 0 and qe_i, ce in (0, 1].
PhotonBudget photon_budget(double qe_i, double tau0_s, double enhancement, double ce);

/// Human-readable arithmetic chain, one step per line.
std::string format_budget(const PhotonBudget& b);

/// 1 - exp(-|tau| / tau1).
double g2(const TwoLevelModel& model, double tau_s);
/// n independent emitters: 1 - exp(-|tau| / tau1) / n.
double g2(const TwoLevelModel& model, double tau_s, int emitters);
/// Mean of g2 over the bin [lo, hi), n emitters.
double g2_bin_average(const TwoLevelModel& model, double lo_s, double hi_s, int emitters = 1);

/// Decay rate k21 multiplied by `rate_enhancement`, pump held. Throws
/// DomainError for a non-positive enhancement.
TwoLevelModel g2_enhanced(const TwoLevelModel& model, double rate_enhancement);

struct HbtOptions {
  double duration_s = 0.0;
  double bin_width_s = 0.0;
  double max_delay_s = 0.0;  // histogram covers |tau| < max_delay; default 5 tau1
  std::uint64_t seed = 1;
  int emitters = 1;          // independent streams merged before the beam splitter
  double dead_time_s = 0.0;  // per detector
  double jitter_s = 0.0;     // Gaussian timing jitter, standard deviation
  int chunks = 16;           // independent sub-runs; fixes the result for any thread count
  int threads = 1;
};

struct HbtHistogram {
  Eigen::VectorXd tau_lo;  // bin edges, s
  Eigen::VectorXd tau_hi;
  Eigen::VectorXd g2;
  Eigen::VectorXd error;  // one-sigma counting error
  Eigen::VectorXd counts;
  Eigen::VectorXd expected;  // uncorrelated-stream coincidences per bin
  std::vector<std::uint64_t> sub_seeds;
  long long detections_a = 0;
  long long detections_b = 0;
  long long coincidences = 0;
  bool insufficient = false;  // fewer than 1e4 coincidences

  Eigen::VectorXd tau_mid() const { return 0.5 * (tau_lo + tau_hi); }
};

/// Two-detector coincidence histogram of a simulated two-level emitter
/// (pump k12, photon-emitting decay k21) behind a 50/50 beam splitter,
/// symmetrised over the sign of the delay. Throws DomainError unless
/// k12 > 0, bin_width < tau1 / 5 and duration >= 100 tau1.
HbtHistogram hbt_montecarlo(const TwoLevelModel& model, const HbtOptions& options);

struct AntibunchingFit {
  double tau1 = 0.0;
  double g2_zero = 0.0;  // 1 - amplitude
  double g2_zero_error = 0.0;
  double chi2_per_dof = 0.0;
};

/// Weighted least-squares fit of 1 - A exp(-tau / tau1) to the histogram,
/// with the model averaged over each bin.
AntibunchingFit fit_antibunching(const HbtHistogram& h);

}  // namespace kerker
