// SPDX-License-Identifier: Apache-2.0
#include "reflectsim/scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reflectsim/error.hpp"

namespace reflectsim {

namespace {

constexpr double kMinDiffusion = 1e-8;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_regular_diffusion(const CoefficientPair& coeffs, double lo, double hi) {
  if (lo > hi) {
    std::swap(lo, hi);
  }
  constexpr int kSamples = 64;
  auto check = [&](double x) {
    const double s = coeffs.diffusion(x);
    if (!(std::abs(s) >= kMinDiffusion)) {
      throw SingularDiffusionError("diffusion below 1e-8", x);
    }
  };
  for (int j = 0; j <= kSamples; ++j) {
    check(lo + (hi - lo) * j / kSamples);
  }
  for (const double b : coeffs.breakpoints) {
    if (b >= lo && b <= hi) {
      check(b);
    }
  }
}

double drift_over_variance(const CoefficientPair& coeffs, double z) {
  const double s = coeffs.diffusion(z);
  return coeffs.drift(z) / (s * s);
}

// Evaluates the exponent of s' piecewise: anchored at the breakpoints inside
// the outer interval so each later call integrates a single smooth piece.
class LogDerivative {
 public:
  LogDerivative(const CoefficientPair& coeffs, const ScaleConfig& cfg, double lo, double hi)
      : coeffs_(coeffs), options_(cfg.quadrature()), anchors_(split_points(lo, hi, coeffs.breakpoints)) {
    require_regular_diffusion(coeffs, std::min(lo, cfg.lower_limit), std::max(hi, cfg.lower_limit));
    values_.reserve(anchors_.size());
    for (const double a : anchors_) {
      values_.push_back(log_scale_derivative_unchecked(a, cfg.lower_limit));
    }
  }

  double operator()(double y) const {
    auto it = std::upper_bound(anchors_.begin(), anchors_.end(), y);
    const std::size_t i = it == anchors_.begin() ? 0 : static_cast<std::size_t>(it - anchors_.begin()) - 1;
    const double a = anchors_[std::min(i, anchors_.size() - 1)];
    const double base = values_[std::min(i, values_.size() - 1)];
    if (y == a) {
      return base;
    }
    auto integrand = [this](double z) { return drift_over_variance(coeffs_, z); };
    return base - 2.0 * integrate(integrand, a, y, coeffs_.breakpoints, options_);
  }

  double log_scale_derivative_unchecked(double x, double b) const {
    auto integrand = [this](double z) { return drift_over_variance(coeffs_, z); };
    return -2.0 * integrate(integrand, b, x, coeffs_.breakpoints, options_);
  }

 private:
  const CoefficientPair& coeffs_;
  QuadratureOptions options_;
  std::vector<double> anchors_;
  std::vector<double> values_;
};

// log of int_lo^hi s'(y) dy for lo < hi.
double log_scale_increment(const CoefficientPair& coeffs, double lo, double hi,
                           const ScaleConfig& cfg) {
  const LogDerivative log_derivative(coeffs, cfg, lo, hi);
  return log_integrate_exp([&](double y) { return log_derivative(y); }, lo, hi,
                           coeffs.breakpoints, cfg.quadrature());
}

}  // namespace

void ScaleConfig::validate() const {
  if (!(quad_rel_tol > 0.0 && quad_rel_tol < 1e-2)) {
    throw ValidationError("quad_rel_tol must lie in (0, 1e-2)");
  }
  if (!(reference_point > 0.0) || !std::isfinite(reference_point)) {
    throw ValidationError("reference point c must be positive");
  }
  if (!std::isfinite(lower_limit)) {
    throw ValidationError("lower limit b must be finite");
  }
  if (quad_max_depth < 1) {
    throw ValidationError("quad_max_depth must be >= 1");
  }
}

double log_scale_derivative(const CoefficientPair& coeffs, double x, const ScaleConfig& cfg) {
  cfg.validate();
  require_regular_diffusion(coeffs, cfg.lower_limit, x);
  auto integrand = [&](double z) { return drift_over_variance(coeffs, z); };
  return -2.0 * integrate(integrand, cfg.lower_limit, x, coeffs.breakpoints, cfg.quadrature());
}

ScaleResult scale_function(const CoefficientPair& coeffs, double x, const ScaleConfig& cfg) {
  cfg.validate();
  const double c = cfg.reference_point;
  if (x == c) {
    return {0.0, kNegInf, 0};
  }
  const int sign = x > c ? 1 : -1;
  const double log_abs = log_scale_increment(coeffs, std::min(x, c), std::max(x, c), cfg);
  if (log_abs == kNegInf) {
    return {0.0, kNegInf, 0};
  }
  return {sign * std::exp(log_abs), log_abs, sign};
}

double scale_function_direct(const CoefficientPair& coeffs, double x, const ScaleConfig& cfg) {
  cfg.validate();
  const double c = cfg.reference_point;
  const double lo = std::min(x, c);
  const double hi = std::max(x, c);
  const LogDerivative log_derivative(coeffs, cfg, lo, hi);
  auto derivative = [&](double y) { return std::exp(log_derivative(y)); };
  return integrate(derivative, c, x, coeffs.breakpoints, cfg.quadrature());
}

double hitting_probability(const CoefficientPair& coeffs, double low, double start, double high,
                           const ScaleConfig& cfg) {
  cfg.validate();
  if (!(low <= start && start <= high)) {
    throw ValidationError("hitting_probability needs low <= start <= high");
  }
  if (!(low < high)) {
    throw ValidationError("degenerate barriers: low == high");
  }
  if (start == high) {
    return 0.0;
  }
  if (start == low) {
    return 1.0;
  }
  const double log_den = log_scale_increment(coeffs, low, high, cfg);
  if (log_den == kNegInf || !std::isfinite(log_den)) {
    throw ValidationError("flat scale function: s(high) == s(low)");
  }
  const double log_num = log_scale_increment(coeffs, start, high, cfg);
  return std::clamp(std::exp(log_num - log_den), 0.0, 1.0);
}

std::vector<ScaleConvergenceRow> scale_convergence_table(const PenaltyFamily& family,
                                                         const DiffusionSpec& spec,
                                                         const std::vector<int>& n_list,
                                                         const ScaleTableOptions& options,
                                                         const ScaleConfig& cfg) {
  cfg.validate();
  if (!(options.x1 > 0.0 && options.x2 > options.x1)) {
    throw ValidationError("scale table interval must satisfy 0 < x1 < x2");
  }
  if (!(options.x_neg < 0.0)) {
    throw ValidationError("x_neg must be negative");
  }
  if (options.probes < 2) {
    throw ValidationError("scale table needs at least 2 probes");
  }
  validate_family(family, n_list);

  const CoefficientPair target = spec.coefficients();
  std::vector<double> xs(options.probes);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = options.x1 + (options.x2 - options.x1) * static_cast<double>(i) /
                             static_cast<double>(xs.size() - 1);
  }
  std::vector<double> target_s;
  std::vector<double> target_ds;
  for (const double x : xs) {
    target_s.push_back(scale_function(target, x, cfg).value);
    target_ds.push_back(std::exp(log_scale_derivative(target, x, cfg)));
  }

  std::vector<ScaleConvergenceRow> rows;
  for (const int n : n_list) {
    const PenaltyMember m = member(family, n);
    ScaleConfig member_cfg = cfg;
    if (options.lower_limit_schedule) {
      member_cfg.lower_limit = options.lower_limit_schedule(n);
    }
    ScaleConvergenceRow row;
    row.n = n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double s = scale_function(m.coeffs, xs[i], member_cfg).value;
      const double ds = std::exp(log_scale_derivative(m.coeffs, xs[i], member_cfg));
      row.sup_scale_gap = std::max(row.sup_scale_gap, std::abs(s - target_s[i]));
      row.sup_derivative_gap = std::max(row.sup_derivative_gap, std::abs(ds - target_ds[i]));
    }
    const ScaleResult neg = scale_function(m.coeffs, options.x_neg, member_cfg);
    row.negative_log_abs = neg.log_abs_value;
    row.negative_sign = neg.sign;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace reflectsim
