// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "reflectsim/engine.hpp"
#include "reflectsim/penalty.hpp"
#include "reflectsim/quadrature.hpp"
#include "reflectsim/reflection.hpp"

namespace reflectsim {

/// Integration limits and tolerances for scale functions
///   s(x) = int_c^x exp(-2 int_b^y drift / diffusion^2 dz) dy.
struct ScaleConfig {
  double reference_point = 1.0;  ///< c, where s(c) = 0
  double lower_limit = 0.0;      ///< b, lower limit of the inner integral
  double quad_rel_tol = 1e-8;
  unsigned quad_max_depth = 40;

  void validate() const;
  QuadratureOptions quadrature() const { return {quad_rel_tol, quad_max_depth}; }
};

/// s(x) as (sign, log|s|); `value` overflows to +-inf when log|s| > ~709.
struct ScaleResult {
  double value = 0.0;
  double log_abs_value = 0.0;
  int sign = 0;
};

/// Exponent of the scale derivative, -2 int_b^x drift / diffusion^2 dz.
double log_scale_derivative(const CoefficientPair& coeffs, double x, const ScaleConfig& cfg);

/// Scale function normalized by s(c) = 0, integrated in log space.
ScaleResult scale_function(const CoefficientPair& coeffs, double x, const ScaleConfig& cfg);

/// Plain quadrature of exp(log s') without log-space shifting. Overflows for
/// large exponents; kept as a cross-check of scale_function.
double scale_function_direct(const CoefficientPair& coeffs, double x, const ScaleConfig& cfg);

/// P(hit low before high | start) = (s(high) - s(start)) / (s(high) - s(low)).
///
/// Numerator and denominator are evaluated as log-integrals of s' over
/// [start, high] and [low, high], so the ratio stays accurate when s(low) is
/// astronomically negative.
double hitting_probability(const CoefficientPair& coeffs, double low, double start, double high,
                           const ScaleConfig& cfg);

struct ScaleConvergenceRow {
  int n = 0;
  double sup_scale_gap = 0.0;       ///< sup |s_n - s| over the probe grid
  double sup_derivative_gap = 0.0;  ///< sup |s_n' - s'|
  double negative_log_abs = 0.0;    ///< log |s_n(x_neg)|
  int negative_sign = 0;
};

struct ScaleTableOptions {
  double x1 = 0.5;
  double x2 = 2.0;
  std::size_t probes = 31;
  double x_neg = -0.1;
  /// Per-n lower limit b_n of the inner integral; defaults to cfg.lower_limit.
  std::function<double(int)> lower_limit_schedule;
};

/// sup-distances between the member and target scale functions on [x1, x2]
/// (x1 > 0), plus the size of s_n at a negative probe point.
std::vector<ScaleConvergenceRow> scale_convergence_table(const PenaltyFamily& family,
                                                         const DiffusionSpec& spec,
                                                         const std::vector<int>& n_list,
                                                         const ScaleTableOptions& options,
                                                         const ScaleConfig& cfg = {});

}  // namespace reflectsim
