#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kerker/constants.hpp"
#include "kerker/mie.hpp"
#include "kerker/types.hpp"

namespace kerker {

/// Far-field intensity sampled on theta in [0, pi] (N_theta points, both
/// endpoints included) and phi in [0, 2 pi) (N_phi points). Intensity is
/// k0^2 dsigma/dOmega, so physical quantities follow by dividing by k0^2.
struct RadiationPattern {
  Eigen::VectorXd theta;
  Eigen::VectorXd phi;
  Eigen::MatrixXd intensity;  // rows: theta, cols: phi
  double k0 = 1.0;

  int n_theta() const { return static_cast<int>(theta.size()); }
  int n_phi() const { return static_cast<int>(phi.size()); }

  /// Integral of the intensity over the full sphere.
  double total_power() const;
  /// Azimuthal integral of each theta row, times sin(theta).
  Eigen::VectorXd polar_profile() const;
  /// Intensity along the phi = 0 (in-plane) and phi = pi/2 (out-of-plane) cuts.
  Eigen::VectorXd in_plane_cut() const;
  Eigen::VectorXd out_of_plane_cut() const;
};

/// Builds a pattern by sampling `f(theta, phi)`.
RadiationPattern make_pattern(int n_theta, int n_phi,
                              const std::function<double(double, double)>& f, double k0 = 1.0);

/// Composite Simpson weights for n equally spaced samples with spacing h
/// (3/8 rule on the last three intervals when n - 1 is odd).
Eigen::VectorXd simpson_weights(int n, double h);

struct ScatteringAmplitudes {
  cplx s_par;   // parallel to the scattering plane
  cplx s_perp;  // perpendicular to it
};

ScatteringAmplitudes scattering_amplitudes(const MieCoefficients& c, double theta);

inline constexpr int kDefaultThetaSamples = 721;
inline constexpr int kDefaultPhiSamples = 72;

/// Differential scattering pattern of the moments; requires N_theta >= 90 and
/// N_phi >= 4.
RadiationPattern pattern(const MieCoefficients& c, int n_theta = kDefaultThetaSamples,
                         int n_phi = kDefaultPhiSamples, double k0 = 1.0);

struct KerkerMetrics {
  double forward_intensity = 0.0;
  double backward_intensity = 0.0;
  double front_back_ratio = 0.0;  // +inf when the backward intensity vanishes
  double directivity = 0.0;       // 4 pi I_max / P_total
  double total_power = 0.0;
};

KerkerMetrics kerker_metrics(const RadiationPattern& p);

enum class KerkerObjective { min_backscatter, max_directivity };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SearchOptions {
  int points_per_dim = 11;
  int rounds = 3;  // refinement rounds after the initial grid
  double zoom = 10.0;
};

struct SearchPoint {
  std::vector<double> params;
  KerkerMetrics metrics;
  double score = 0.0;  // lower is better
};

struct SearchResult {
  SearchPoint best;
  std::vector<SearchPoint> evaluated;
  std::vector<std::string> failures;  // "params: reason" for skipped points
};

using PatternEvaluator = std::function<RadiationPattern(std::span<const double>)>;

/// Objective value, lower is better: normalised backscatter 4 pi I(pi)/P
/// or minus the directivity.
double objective_score(KerkerObjective objective, const KerkerMetrics& m);

/// Deterministic grid search followed by `rounds` refinements, each shrinking
/// the box around the incumbent by `zoom`. Ties resolve to the
/// lexicographically smallest parameter vector. Points whose evaluation
/// throws are skipped and recorded in `failures`.
SearchResult kerker_search(KerkerObjective objective, std::span<const Interval> domain,
                           const PatternEvaluator& evaluate, const SearchOptions& options = {});

enum class MixMode { average_cuts, symmetrize_updown };

struct MixWeights {
  double in_plane = 0.5;  // weight of the phi = 0 cut in average_cuts
  double downward = 0.5;  // weight of I(pi - theta) in symmetrize_updown
};

/// Azimuthal symmetrisation (and optional up/down averaging) of a moment
/// pattern. N_phi must be a multiple of 4 so that the phi = pi/2 cut is sampled.
RadiationPattern mix_emission(const RadiationPattern& p, MixMode mode,
                              const MixWeights& weights = {});

enum class CollectionSide { top, bottom };

/// Fraction of the total power inside the cone theta < asin(NA) about +z
/// (top) or -z (bottom). NA in (0, 1]; NA = 1 collects a full hemisphere.
double collection_efficiency(const RadiationPattern& p, double numerical_aperture,
                             CollectionSide side = CollectionSide::top);

}  // namespace kerker
