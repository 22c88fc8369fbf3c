// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace reflectsim {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  unsigned max_depth = 40;
};

/// Adaptive Gauss-Kronrod (7/15) integral of f over [lo, hi], split at every
/// breakpoint strictly inside the interval. lo > hi integrates with the
/// usual sign flip. Throws QuadratureError when a piece misses rel_tol.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints, const QuadratureOptions& options);

/// The sorted, deduplicated subdivision lo = p_0 < ... < p_m = hi of
/// [lo, hi] (lo < hi) by the breakpoints inside it.
std::vector<double> split_points(double lo, double hi, std::span<const double> breakpoints);

/// log of the integral of exp(log_f) over [lo, hi], lo < hi, computed as
/// M + log(integral of exp(log_f - M)) with M the largest sampled exponent on
/// each piece, so exponents far above the double range are fine. Returns
/// -inf when the integrand vanishes.
double log_integrate_exp(const std::function<double(double)>& log_f, double lo, double hi,
                         std::span<const double> breakpoints, const QuadratureOptions& options);

/// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

}  // namespace reflectsim
