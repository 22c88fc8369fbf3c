// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reflectsim/engine.hpp"
#include "reflectsim/penalty.hpp"
#include "reflectsim/reflection.hpp"

namespace reflectsim {

/// Constant of the modulus-of-continuity tail bound.
inline constexpr double kModulusKappa = 8192.0 / 3.0;

/// Largest |F_emp - cdf| over the jumps of a sorted sample, both sides.
double ks_statistic(std::span<const double> sorted_sample,
                    const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance between sorted samples.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

double standard_normal_cdf(double x);

/// P(Z(t) <= x) for reflected Brownian motion started at z0 >= 0:
/// Phi((x - z0)/sqrt t) - Phi((-x - z0)/sqrt t) for x >= 0, else 0.
double rbm_marginal_cdf(double z0, double t, double x);

/// sqrt(p (1 - p) / m)
double binomial_se(double p, std::size_t m);

struct StudyRow {
  int n = 0;
  double ks = 0.0;
  double excursion_prob = 0.0;
  double excursion_se = 0.0;
  double coupled_sup_mean = 0.0;
  std::size_t paths = 0;   ///< paths that completed
  double h = 0.0;
  std::uint64_t seed = 0;
  std::size_t failed = 0;  ///< paths dropped on numerical failure
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::string family;      ///< schedule, recorded verbatim
  double epsilon = 0.0;
  bool valid = true;       ///< false if > 0.1% of paths failed for some n
  std::vector<std::string> warnings;
};

struct StudyOptions {
  std::size_t threads = 1;
  /// CDF of Z(T). When empty, KS is the two-sample distance to the simulated
  /// reflected sample.
  std::function<double(double)> target_cdf;
  /// Run the limit-condition checks first and warn if any fails.
  bool check_conditions = true;
};

/// Per-n statistics of X_n against Z, both driven by the same noise:
/// KS distance of X_n(T), P(min X_n <= -epsilon) with its standard error,
/// and the mean of sup_t |X_n(t) - Z(t)| (a coupling diagnostic).
StudyReport convergence_study(const PenaltyFamily& family, const DiffusionSpec& spec,
                              const std::vector<int>& n_list, double epsilon,
                              const SimulationConfig& config, const StudyOptions& options = {});

struct ProbabilityEstimate {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t paths = 0;
};

/// alpha(k) = e^{2k} / (1 + e^{2k}).
double skew_alpha(double k);

/// Monte Carlo P(X(T) > 0) for dX = drift dt + diffusion dW, X(0) = z0.
ProbabilityEstimate sign_probability(const CoefficientPair& coeffs, double z0,
                                     const SimulationConfig& config, std::size_t threads = 1);

/// P(X(T) > 0) for the left wall of width c = k / a and height a started
/// at 0 with unit diffusion; tends to alpha(k) as a grows.
ProbabilityEstimate skew_limit_estimate(double k, double a, const SimulationConfig& config,
                                        std::size_t threads = 1);

struct FirstPassageEstimate {
  double frequency = 0.0;   ///< fraction of paths reaching low before high
  double se = 0.0;
  std::size_t paths = 0;
  std::size_t unresolved = 0;  ///< paths still inside (low, high) at the horizon
};

/// Discretely monitored exit of (low, high): a path counts as hitting low
/// when some grid value is <= low before any is >= high. The horizon caps
/// the run; unresolved paths count as not hitting low.
FirstPassageEstimate first_passage_frequency(const CoefficientPair& coeffs, double start,
                                             double low, double high,
                                             const SimulationConfig& config,
                                             std::size_t threads = 1);

struct ModulusQuery {
  double delta = 0.0;  ///< time window
  double distance = 0.0;  ///< D
  double alpha = 0.0;  ///< I = [alpha, beta]
  double beta = 0.0;
  double diffusion_bound = 1.0;  ///< K
  double horizon = 1.0;  ///< T

  void validate() const;
};

/// min(1, kappa T K^4 delta / D^2).
double modulus_bound(const ModulusQuery& q);

/// True if some grid times t1 <= t2 <= t1 + delta have both values in I and
/// |x(t2) - x(t1)| >= D. O(N) with monotone deques.
bool modulus_event_occurs(std::span<const double> values, double step, const ModulusQuery& q);

struct ModulusEstimate {
  double frequency = 0.0;
  double se = 0.0;
  double bound = 0.0;  ///< min(1, kappa T K^4 delta / D^2)
  double raw_bound = 0.0;  ///< kappa T K^4 delta / D^2
  std::size_t paths = 0;
};

/// Fraction of paths on which the modulus event occurs. All paths must share
/// a grid with step <= delta / 4.
ModulusEstimate modulus_event_frequency(std::span<const GridPath> paths, const ModulusQuery& q);

/// Streaming variant: simulates config.num_paths Euler paths and scans each.
ModulusEstimate modulus_study(const CoefficientPair& coeffs, double z0,
                              const SimulationConfig& config, const ModulusQuery& q,
                              std::size_t threads = 1);

}  // namespace reflectsim
