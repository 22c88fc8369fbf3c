// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reflectsim/engine.hpp"
#include "reflectsim/quadrature.hpp"
#include "reflectsim/reflection.hpp"

namespace reflectsim {

/// Index-to-value schedule for a_n and c_n.
///
///   constant:    v
///   power:       coef * n^exponent
///   geometric:   coef * base^n
///   power_of_a:  coef * a_n^exponent   (c schedules only)
struct Schedule {
  enum class Kind { constant, power, geometric, power_of_a };

  Kind kind = Kind::constant;
  double coef = 1.0;
  double param = 0.0;  ///< exponent or base, unused for constant

  double at(int n, double a_n = 0.0) const;
  std::string describe() const;

  static Schedule constant(double v) { return {Kind::constant, v, 0.0}; }
  static Schedule power(double coef, double exponent) { return {Kind::power, coef, exponent}; }
  static Schedule geometric(double coef, double base) { return {Kind::geometric, coef, base}; }
  static Schedule power_of_a(double coef, double exponent) {
    return {Kind::power_of_a, coef, exponent};
  }
};

/// Shape psi of a scaled penalty a_n psi(x / c_n), with its jump points.
struct Profile {
  std::string name;
  std::function<double(double)> fn;
  std::vector<double> breakpoints;

  double operator()(double x) const { return fn(x); }

  static Profile indicator_left();   ///< 1_[-1, 0]
  static Profile indicator_right();  ///< 1_[0, 1]
  static Profile exp_left();         ///< e^{-|x|} 1_(-inf, 0]
  static Profile exp_two_sided();    ///< e^{-|x|}
  static Profile zero();
  /// Piecewise-linear interpolation of (xs, ys), zero outside [xs.front(), xs.back()].
  static Profile tabulated(std::vector<double> xs, std::vector<double> ys);
};

enum class FamilyKind { wall_left, wall_right, scaled_profile };

std::string to_string(FamilyKind kind);

/// Penalized coefficients f_n = g + penalty_n, sigma_n, start z_n.
///
/// wall_left penalty is a_n 1_(-c_n, 0), wall_right a_n 1_(0, c_n), and
/// scaled_profile a_n psi(x / c_n). g, sigma and z0 come from the target spec
/// (extended constant below 0) unless overridden by the schedules.
struct PenaltyFamily {
  FamilyKind kind = FamilyKind::wall_left;
  Schedule a = Schedule::power(1.0, 1.0);
  Schedule c = Schedule::power(1.0, -0.5);
  std::optional<Profile> profile;

  std::function<double(double)> base_drift = [](double) { return 0.0; };
  std::function<double(double)> base_diffusion = [](double) { return 1.0; };
  double z0 = 0.0;
  /// Known-constant base coefficients (copied from the target spec).
  std::optional<double> base_drift_constant;
  std::optional<double> base_diffusion_constant;

  /// Optional per-n overrides.
  std::function<double(int, double)> sigma_schedule;
  std::function<double(int)> start_schedule;

  double a_at(int n) const { return a.at(n); }
  double c_at(int n) const { return c.at(n, a.at(n)); }
  std::string describe() const;

  /// Family with g, sigma, z0 taken from `target`.
  static PenaltyFamily for_target(FamilyKind kind, Schedule a, Schedule c,
                                  const DiffusionSpec& target,
                                  std::optional<Profile> profile = std::nullopt);
};

struct PenaltyMember {
  int n = 1;
  double a = 0.0;
  double c = 0.0;
  CoefficientPair coeffs;
  double start = 0.0;

  /// Penalty part f_n - g alone.
  std::function<double(double)> penalty;
};

/// Coefficients of family member n (n >= 1), with quadrature breakpoints
/// registered at the penalty jumps.
PenaltyMember member(const PenaltyFamily& family, int n);

/// Throws ValidationError if a_n or c_n is not positive for some n in n_list.
void validate_family(const PenaltyFamily& family, const std::vector<int>& n_list);

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

/// A named numeric series backing a verdict.
struct Evidence {
  std::string label;
  std::vector<double> values;
};

struct ConditionResult {
  std::string name;
  Verdict verdict = Verdict::inconclusive;
  std::vector<Evidence> evidence;
};

struct ConditionReport {
  std::vector<int> n_list;
  std::array<ConditionResult, 5> conditions;  ///< (i) .. (v)

  bool all_pass() const;
};

/// Where the limit conditions are probed.
struct ProbePlan {
  std::vector<std::pair<double, double>> compact_intervals{{0.05, 0.5}, {0.5, 2.0}};
  double sigma_probe_max = 2.0;                     ///< (iii) sup over [0, x]
  std::size_t grid_points = 401;
  std::vector<double> equicontinuity_radii{0.1, 0.01, 0.001};  ///< (iv)
  double layer_delta = 0.05;                        ///< (v) probes |x| < delta
  std::vector<double> drift_slack{0.1, 0.01};       ///< (v) epsilons
  double sup_tolerance = 1e-3;                      ///< (iii), (iv)
  QuadratureOptions quadrature{1e-10, 40};
};

/// Trend-based verdicts for the five limit conditions of the penalty
/// convergence theorem along an increasing n_list (length >= 3):
///   (i)   int_{-e}^{e} f_n diverges, e in {c_N/2, c_N, 2 c_N, 0.1}
///   (ii)  int_{x1}^{x2} |f_n - g| -> 0 on each compact interval
///   (iii) sigma_n -> sigma uniformly on [0, x]
///   (iv)  sigma_n equicontinuous at 0
///   (v)   f_n > g - e near 0 eventually
ConditionReport check_theorem1_conditions(const PenaltyFamily& family,
                                          const DiffusionSpec& spec,
                                          const std::vector<int>& n_list,
                                          const ProbePlan& probes = {});

struct PsiGridPlan {
  std::vector<double> near_zero_radii{1e-2, 1e-3, 1e-4, 1e-5};
  std::size_t points_per_radius = 201;
  std::vector<double> tail_starts{10.0, 100.0, 1000.0};
  std::vector<double> integral_radii{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  double tail_tolerance = 1e-6;
  double integral_tolerance = 1e-6;
  QuadratureOptions quadrature{1e-10, 40};
};

struct PsiReport {
  Verdict liminf_at_zero = Verdict::inconclusive;
  Verdict finite_positive_integral = Verdict::inconclusive;
  Verdict vanishing_tail = Verdict::inconclusive;
  double integral = 0.0;  ///< estimate of I = lim int_{-y}^{y} psi
  std::vector<double> near_zero_minima;
  std::vector<double> truncated_integrals;
  std::vector<double> tail_sups;

  bool all_pass() const;
  Verdict overall() const;
};

/// Numeric proxies for: liminf_{x->0} psi >= 0, I in (0, inf), psi(x) -> 0
/// as x -> +inf.
PsiReport check_psi_properties(const Profile& psi, const PsiGridPlan& plan = {});

struct GrowthReport {
  Verdict verdict = Verdict::inconclusive;
  std::vector<double> x0s;
  std::vector<std::vector<double>> tail_products;  ///< [x0][n]: a_n sup_{x >= x0/c_n} |psi|
};

/// Tail growth condition for scaled profiles: a_n sup_{x >= x0/c_n} |psi(x)|
/// -> 0, probed at x0 in {0.1, 1}. Pass when the product is decreasing at the
/// end of n_list and below 1e-3.
GrowthReport check_example3_growth(const PenaltyFamily& family, const std::vector<int>& n_list,
                                   std::vector<double> x0s = {0.1, 1.0});

}  // namespace reflectsim
