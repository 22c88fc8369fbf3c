// SPDX-License-Identifier: Apache-2.0
#include "reflectsim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "reflectsim/error.hpp"

namespace reflectsim {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Segment {
  double lo, hi, value, error, l1;
  unsigned depth;
};

Segment kronrod(const std::function<double(double)>& f, double lo, double hi, unsigned depth) {
  Segment s{lo, hi, 0.0, 0.0, 0.0, depth};
  s.value = Kronrod::integrate(f, lo, hi, 0, 0.0, &s.error, &s.l1);
  // Boost scales L1 to [lo, hi] but leaves the error in [-1, 1] units.
  s.error *= 0.5 * (hi - lo);
  s.l1 = std::abs(s.l1);
  return s;
}

// Globally adaptive: always bisects the segment with the largest error
// estimate, so the tolerance applies to the sum rather than being halved
// per level (which makes recursive schemes exponential near rounding level).
double integrate_piece(const std::function<double(double)>& f, double lo, double hi,
                       const QuadratureOptions& options) {
  constexpr std::size_t kMaxSegments = 1 << 14;
  auto by_error = [](const Segment& a, const Segment& b) { return a.error < b.error; };
  std::vector<Segment> heap{kronrod(f, lo, hi, 0)};
  std::vector<Segment> settled;  // at max depth, cannot be split further
  double error = heap.front().error;
  double l1 = heap.front().l1;
  while (true) {
    if (!std::isfinite(error) || !std::isfinite(l1)) {
      throw QuadratureError("non-finite integral", lo, hi);
    }
    // Absolute floor keeps integrands that are zero up to rounding from failing.
    const double allowed = std::max(options.rel_tol * l1, 1e-300) +
                           64.0 * std::numeric_limits<double>::epsilon() * l1;
    if (error <= allowed) {
      // The running error sum drifts; confirm with an exact resum.
      double value = 0.0;
      double exact_error = 0.0;
      for (const auto* group : {&heap, &settled}) {
        for (const Segment& seg : *group) {
          value += seg.value;
          exact_error += seg.error;
        }
      }
      if (!std::isfinite(value)) {
        throw QuadratureError("non-finite integral", lo, hi);
      }
      if (exact_error <= allowed) {
        return value;
      }
      error = exact_error;
    }
    if (heap.empty() || heap.size() + settled.size() >= kMaxSegments) {
      const auto worst = std::max_element(settled.begin(), settled.end(), by_error);
      if (worst != settled.end()) {
        throw QuadratureError("adaptive quadrature did not converge", worst->lo, worst->hi);
      }
      throw QuadratureError("adaptive quadrature did not converge", lo, hi);
    }
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Segment worst = heap.back();
    heap.pop_back();
    if (worst.depth >= options.max_depth) {
      settled.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.lo + worst.hi);
    error -= worst.error;
    l1 -= worst.l1;
    for (const Segment& child : {kronrod(f, worst.lo, mid, worst.depth + 1),
                                 kronrod(f, mid, worst.hi, worst.depth + 1)}) {
      error += child.error;
      l1 += child.l1;
      heap.push_back(child);
      std::push_heap(heap.begin(), heap.end(), by_error);
    }
  }
}

}  // namespace

std::vector<double> split_points(double lo, double hi, std::span<const double> breakpoints) {
  std::vector<double> pts{lo};
  for (const double b : breakpoints) {
    if (b > lo && b < hi) {
      pts.push_back(b);
    }
  }
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints, const QuadratureOptions& options) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw QuadratureError("integration limits must be finite", lo, hi);
  }
  if (lo == hi) {
    return 0.0;
  }
  if (lo > hi) {
    return -integrate(f, hi, lo, breakpoints, options);
  }
  const auto pts = split_points(lo, hi, breakpoints);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += integrate_piece(f, pts[i], pts[i + 1], options);
  }
  return total;
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) {
    return b;
  }
  if (b == kNegInf) {
    return a;
  }
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

namespace {

// Log-integral over one smooth piece. Pieces whose sampled exponent spans
// more than kSpan are bisected so exp(log_f - shift) stays representable.
double log_integrate_piece(const std::function<double(double)>& log_f, double a, double b,
                           const QuadratureOptions& options, unsigned depth) {
  constexpr int kSamples = 32;
  constexpr double kSpan = 300.0;
  double shift = kNegInf;
  double floor = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= kSamples; ++j) {
    // Stay off the endpoints: the integrand may jump exactly there.
    const double t = (j + 0.5) / (kSamples + 1.0);
    const double v = log_f(a + t * (b - a));
    if (std::isnan(v)) {
      throw QuadratureError("log-integrand is NaN", a, b);
    }
    shift = std::max(shift, v);
    floor = std::min(floor, v);
  }
  if (shift == kNegInf) {
    return kNegInf;
  }
  if (shift - floor > kSpan && depth < options.max_depth) {
    const double mid = 0.5 * (a + b);
    return log_add_exp(log_integrate_piece(log_f, a, mid, options, depth + 1),
                       log_integrate_piece(log_f, mid, b, options, depth + 1));
  }
  auto scaled = [&](double y) { return std::exp(log_f(y) - shift); };
  const double piece = integrate_piece(scaled, a, b, options);
  return piece > 0.0 ? shift + std::log(piece) : kNegInf;
}

}  // namespace

double log_integrate_exp(const std::function<double(double)>& log_f, double lo, double hi,
                         std::span<const double> breakpoints, const QuadratureOptions& options) {
  if (!(lo < hi)) {
    throw QuadratureError("log_integrate_exp needs lo < hi", lo, hi);
  }
  const auto pts = split_points(lo, hi, breakpoints);
  double total = kNegInf;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total = log_add_exp(total, log_integrate_piece(log_f, pts[i], pts[i + 1], options, 0));
  }
  return total;
}

}  // namespace reflectsim
