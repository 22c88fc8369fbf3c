// SPDX-License-Identifier: Apache-2.0
#include "reflectsim/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "reflectsim/error.hpp"

namespace reflectsim {

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Uniform grid with `points` nodes over [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t points) {
  std::vector<double> xs(points);
  for (std::size_t i = 0; i < points; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return xs;
}

// Verdict for a quantity that should shrink below `tol`.
Verdict shrinks_below(const std::vector<double>& v, double tol) {
  const double first = v.front();
  const double last = v.back();
  if (!std::isfinite(last)) {
    return Verdict::fail;
  }
  if (last <= tol && last <= first) {
    return Verdict::pass;
  }
  if (last > tol && last >= first) {
    return Verdict::fail;
  }
  return Verdict::inconclusive;
}

Verdict combine(const std::vector<Verdict>& parts) {
  if (std::find(parts.begin(), parts.end(), Verdict::fail) != parts.end()) {
    return Verdict::fail;
  }
  if (std::all_of(parts.begin(), parts.end(), [](Verdict v) { return v == Verdict::pass; })) {
    return Verdict::pass;
  }
  return Verdict::inconclusive;
}

}  // namespace

double Schedule::at(int n, double a_n) const {
  const double x = static_cast<double>(n);
  switch (kind) {
    case Kind::constant:
      return coef;
    case Kind::power:
      return coef * std::pow(x, param);
    case Kind::geometric:
      return coef * std::pow(param, x);
    case Kind::power_of_a:
      return coef * std::pow(a_n, param);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string Schedule::describe() const {
  switch (kind) {
    case Kind::constant:
      return format_number(coef);
    case Kind::power:
      return format_number(coef) + "*n^" + format_number(param);
    case Kind::geometric:
      return format_number(coef) + "*" + format_number(param) + "^n";
    case Kind::power_of_a:
      return format_number(coef) + "*a_n^" + format_number(param);
  }
  return "?";
}

Profile Profile::indicator_left() {
  return {"indicator_left", [](double x) { return (x >= -1.0 && x <= 0.0) ? 1.0 : 0.0; },
          {-1.0, 0.0}};
}

Profile Profile::indicator_right() {
  return {"indicator_right", [](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; },
          {0.0, 1.0}};
}

Profile Profile::exp_left() {
  return {"exp_left", [](double x) { return x <= 0.0 ? std::exp(x) : 0.0; }, {0.0}};
}

Profile Profile::exp_two_sided() {
  return {"exp_two_sided", [](double x) { return std::exp(-std::abs(x)); }, {0.0}};
}

Profile Profile::zero() {
  return {"zero", [](double) { return 0.0; }, {}};
}

Profile Profile::tabulated(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() < 2 || xs.size() != ys.size()) {
    throw ValidationError("tabulated profile needs >= 2 matching (x, y) points");
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) {
      throw ValidationError("tabulated profile abscissae must be strictly increasing");
    }
  }
  std::vector<double> breakpoints = xs;
  auto fn = [xs = std::move(xs), ys = std::move(ys)](double x) {
    if (x < xs.front() || x > xs.back()) {
      return 0.0;
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) {
      return ys.back();
    }
    const auto i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
  };
  return {"tabulated", std::move(fn), std::move(breakpoints)};
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::wall_left:
      return "wall_left";
    case FamilyKind::wall_right:
      return "wall_right";
    case FamilyKind::scaled_profile:
      return "scaled_profile";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

std::string PenaltyFamily::describe() const {
  std::string out = to_string(kind) + " a_n=" + a.describe() + " c_n=" + c.describe();
  if (kind == FamilyKind::scaled_profile && profile) {
    out += " psi=" + profile->name;
  }
  return out;
}

PenaltyFamily PenaltyFamily::for_target(FamilyKind kind, Schedule a, Schedule c,
                                        const DiffusionSpec& target,
                                        std::optional<Profile> profile) {
  PenaltyFamily family;
  family.kind = kind;
  family.a = a;
  family.c = c;
  family.profile = std::move(profile);
  family.base_drift = [g = target.drift](double x) { return g(x < 0.0 ? 0.0 : x); };
  family.base_diffusion = [s = target.diffusion](double x) { return s(x < 0.0 ? 0.0 : x); };
  family.z0 = target.z0;
  family.base_drift_constant = target.constant_drift;
  family.base_diffusion_constant = target.constant_diffusion;
  return family;
}

PenaltyMember member(const PenaltyFamily& family, int n) {
  if (n < 1) {
    throw ValidationError("family index n must be >= 1");
  }
  PenaltyMember m;
  m.n = n;
  m.a = family.a_at(n);
  m.c = family.c_at(n);
  const double a = m.a;
  const double c = m.c;
  std::vector<double> breakpoints;
  const bool fused = family.base_drift_constant.has_value();
  const double g0 = family.base_drift_constant.value_or(0.0);
  switch (family.kind) {
    case FamilyKind::wall_left:
      m.penalty = [a, c](double x) { return (x > -c && x < 0.0) ? a : 0.0; };
      if (fused) {
        m.coeffs.drift = [a, c, g0](double x) { return g0 + ((x > -c && x < 0.0) ? a : 0.0); };
      }
      breakpoints = {-c, 0.0};
      break;
    case FamilyKind::wall_right:
      m.penalty = [a, c](double x) { return (x > 0.0 && x < c) ? a : 0.0; };
      if (fused) {
        m.coeffs.drift = [a, c, g0](double x) { return g0 + ((x > 0.0 && x < c) ? a : 0.0); };
      }
      breakpoints = {0.0, c};
      break;
    case FamilyKind::scaled_profile: {
      if (!family.profile) {
        throw ValidationError("scaled_profile family needs a profile");
      }
      m.penalty = [a, c, psi = family.profile->fn](double x) { return a * psi(x / c); };
      for (const double b : family.profile->breakpoints) {
        breakpoints.push_back(c * b);
      }
      break;
    }
  }
  if (!m.coeffs.drift) {
    m.coeffs.drift = [g = family.base_drift, p = m.penalty](double x) { return g(x) + p(x); };
  }
  if (family.sigma_schedule) {
    m.coeffs.diffusion = [s = family.sigma_schedule, n](double x) { return s(n, x); };
  } else {
    m.coeffs.diffusion = family.base_diffusion;
    m.coeffs.constant_diffusion = family.base_diffusion_constant;
  }
  m.coeffs.breakpoints = std::move(breakpoints);
  m.start = family.start_schedule ? family.start_schedule(n) : family.z0;
  return m;
}

void validate_family(const PenaltyFamily& family, const std::vector<int>& n_list) {
  if (family.kind == FamilyKind::scaled_profile && !family.profile) {
    throw ValidationError("scaled_profile family needs a profile");
  }
  for (const int n : n_list) {
    if (n < 1) {
      throw ValidationError("family index n must be >= 1");
    }
    const double a = family.a_at(n);
    const double c = family.c_at(n);
    if (!(a > 0.0) || !std::isfinite(a) || !(c > 0.0) || !std::isfinite(c)) {
      throw ValidationError("a_n and c_n must be positive and finite (n = " +
                            std::to_string(n) + ")");
    }
  }
}

bool ConditionReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& r) { return r.verdict == Verdict::pass; });
}

ConditionReport check_theorem1_conditions(const PenaltyFamily& family,
                                          const DiffusionSpec& spec,
                                          const std::vector<int>& n_list,
                                          const ProbePlan& probes) {
  if (n_list.size() < 3) {
    throw ValidationError("condition checks need at least 3 values of n");
  }
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) {
      throw ValidationError("n_list must be strictly increasing");
    }
  }
  validate_family(family, n_list);
  if (probes.grid_points < 3) {
    throw ValidationError("probe grid needs at least 3 points");
  }

  std::vector<PenaltyMember> members;
  members.reserve(n_list.size());
  for (const int n : n_list) {
    members.push_back(member(family, n));
  }
  const auto g = [&spec](double x) { return spec.extended_drift(x); };
  const auto sigma = [&spec](double x) { return spec.extended_diffusion(x); };

  ConditionReport report;
  report.n_list = n_list;

  // (i)
  {
    auto& r = report.conditions[0];
    r.name = "(i) divergence of the penalty integral near 0";
    const double c_last = members.back().c;
    std::vector<Verdict> parts;
    for (const double eps : {0.5 * c_last, c_last, 2.0 * c_last, 0.1}) {
      Evidence e{"eps=" + format_number(eps), {}};
      for (const auto& m : members) {
        e.values.push_back(
            integrate(m.coeffs.drift, -eps, eps, m.coeffs.breakpoints, probes.quadrature));
      }
      const auto& v = e.values;
      const bool increasing = std::adjacent_find(v.begin(), v.end(), [](double a, double b) {
                                return !(b > a);
                              }) == v.end();
      if (increasing && v.back() > 10.0 * std::abs(v.front()) && v.back() > 100.0) {
        parts.push_back(Verdict::pass);
      } else if (v.back() <= v.front()) {
        parts.push_back(Verdict::fail);
      } else {
        parts.push_back(Verdict::inconclusive);
      }
      r.evidence.push_back(std::move(e));
    }
    r.verdict = combine(parts);
  }

  // (ii)
  {
    auto& r = report.conditions[1];
    r.name = "(ii) L1 convergence of the drift on compacts of (0, inf)";
    std::vector<Verdict> parts;
    for (const auto& [x1, x2] : probes.compact_intervals) {
      if (!(x1 > 0.0 && x2 > x1)) {
        throw ValidationError("compact intervals must satisfy 0 < x1 < x2");
      }
      Evidence e{"[" + format_number(x1) + "," + format_number(x2) + "]", {}};
      for (const auto& m : members) {
        auto gap = [&](double x) { return std::abs(m.coeffs.drift(x) - g(x)); };
        e.values.push_back(integrate(gap, x1, x2, m.coeffs.breakpoints, probes.quadrature));
      }
      parts.push_back(shrinks_below(e.values, 1e-3 * (x2 - x1)));
      r.evidence.push_back(std::move(e));
    }
    r.verdict = combine(parts);
  }

  // (iii)
  {
    auto& r = report.conditions[2];
    r.name = "(iii) uniform convergence of the diffusion on [0, x]";
    const auto xs = linspace(0.0, probes.sigma_probe_max, probes.grid_points);
    Evidence e{"sup[0," + format_number(probes.sigma_probe_max) + "]", {}};
    for (const auto& m : members) {
      double sup = 0.0;
      for (const double x : xs) {
        sup = std::max(sup, std::abs(m.coeffs.diffusion(x) - sigma(x)));
      }
      e.values.push_back(sup);
    }
    r.verdict = shrinks_below(e.values, probes.sup_tolerance);
    r.evidence.push_back(std::move(e));
  }

  // (iv)
  {
    auto& r = report.conditions[3];
    r.name = "(iv) equicontinuity of the diffusion at 0";
    Evidence e{"sup_n osc", {}};
    for (const double delta : probes.equicontinuity_radii) {
      const auto xs = linspace(-delta, delta, probes.grid_points);
      double sup = 0.0;
      for (const auto& m : members) {
        const double at0 = m.coeffs.diffusion(0.0);
        for (const double x : xs) {
          sup = std::max(sup, std::abs(m.coeffs.diffusion(x) - at0));
        }
      }
      e.values.push_back(sup);
    }
    r.verdict = shrinks_below(e.values, probes.sup_tolerance);
    r.evidence.push_back(std::move(e));
  }

  // (v)
  {
    auto& r = report.conditions[4];
    r.name = "(v) drift bounded below near 0";
    const double delta = probes.layer_delta;
    std::vector<double> xs;
    for (std::size_t j = 0; j < probes.grid_points; ++j) {
      xs.push_back(-delta + 2.0 * delta * (static_cast<double>(j) + 0.5) /
                                static_cast<double>(probes.grid_points));
    }
    Evidence e{"min(f_n-g) on |x|<" + format_number(delta), {}};
    for (const auto& m : members) {
      std::vector<double> local = xs;
      for (const double b : m.coeffs.breakpoints) {
        for (const double x : {std::nextafter(b, -1e300), b, std::nextafter(b, 1e300)}) {
          if (std::abs(x) < delta) {
            local.push_back(x);
          }
        }
      }
      double lowest = std::numeric_limits<double>::infinity();
      for (const double x : local) {
        lowest = std::min(lowest, m.coeffs.drift(x) - g(x));
      }
      e.values.push_back(lowest);
    }
    const std::size_t tail = (n_list.size() + 1) / 2;
    std::vector<Verdict> parts;
    for (const double eps : probes.drift_slack) {
      const auto begin = e.values.end() - static_cast<std::ptrdiff_t>(tail);
      if (std::all_of(begin, e.values.end(), [eps](double v) { return v > -eps; })) {
        parts.push_back(Verdict::pass);
      } else if (std::all_of(begin, e.values.end(), [eps](double v) { return v <= -eps; })) {
        parts.push_back(Verdict::fail);
      } else {
        parts.push_back(Verdict::inconclusive);
      }
    }
    r.verdict = combine(parts);
    r.evidence.push_back(std::move(e));
  }
  return report;
}

bool PsiReport::all_pass() const { return overall() == Verdict::pass; }

Verdict PsiReport::overall() const {
  return combine({liminf_at_zero, finite_positive_integral, vanishing_tail});
}

PsiReport check_psi_properties(const Profile& psi, const PsiGridPlan& plan) {
  PsiReport report;
  const auto& f = psi.fn;

  for (const double r : plan.near_zero_radii) {
    double lowest = std::numeric_limits<double>::infinity();
    const std::size_t p = std::max<std::size_t>(plan.points_per_radius, 2);
    for (std::size_t j = 1; j < p; ++j) {
      const double x = r * static_cast<double>(j) / static_cast<double>(p - 1);
      lowest = std::min({lowest, f(x), f(-x)});
    }
    report.near_zero_minima.push_back(lowest);
  }
  {
    const double first = report.near_zero_minima.front();
    const double last = report.near_zero_minima.back();
    constexpr double kSlack = 1e-9;
    if (last >= -kSlack) {
      report.liminf_at_zero = Verdict::pass;
    } else if (last <= first) {
      report.liminf_at_zero = Verdict::fail;
    } else {
      report.liminf_at_zero = Verdict::inconclusive;
    }
  }

  {
    std::vector<double> breakpoints = psi.breakpoints;
    breakpoints.push_back(0.0);
    double running = 0.0;
    double prev_radius = 0.0;
    for (const double y : plan.integral_radii) {
      running += integrate(f, -y, -prev_radius, breakpoints, plan.quadrature);
      running += integrate(f, prev_radius, y, breakpoints, plan.quadrature);
      report.truncated_integrals.push_back(running);
      prev_radius = y;
    }
    const auto& v = report.truncated_integrals;
    report.integral = v.back();
    const bool converged =
        v.size() >= 2 && std::isfinite(v.back()) &&
        std::abs(v.back() - v[v.size() - 2]) <=
            plan.integral_tolerance * std::max(1.0, std::abs(v.back()));
    if (!converged) {
      report.finite_positive_integral = Verdict::inconclusive;
    } else if (v.back() > plan.integral_tolerance) {
      report.finite_positive_integral = Verdict::pass;
    } else {
      report.finite_positive_integral = Verdict::fail;
    }
  }

  for (const double y : plan.tail_starts) {
    double sup = 0.0;
    constexpr int kPoints = 400;
    for (int j = 0; j <= kPoints; ++j) {
      sup = std::max(sup, std::abs(f(y * std::pow(10.0, j / static_cast<double>(kPoints)))));
    }
    report.tail_sups.push_back(sup);
  }
  report.vanishing_tail = shrinks_below(report.tail_sups, plan.tail_tolerance);
  return report;
}

GrowthReport check_example3_growth(const PenaltyFamily& family, const std::vector<int>& n_list,
                                   std::vector<double> x0s) {
  if (family.kind != FamilyKind::scaled_profile || !family.profile) {
    throw ValidationError("growth check applies to scaled_profile families only");
  }
  if (n_list.size() < 2) {
    throw ValidationError("growth check needs at least 2 values of n");
  }
  validate_family(family, n_list);
  constexpr double kTolerance = 1e-3;
  constexpr int kPoints = 600;
  const auto& psi = *family.profile;

  GrowthReport report;
  report.x0s = x0s;
  std::vector<Verdict> parts;
  for (const double x0 : x0s) {
    std::vector<double> products;
    for (const int n : n_list) {
      const double start = x0 / family.c_at(n);
      double sup = 0.0;
      // Log-spaced over [start, start * 1e6], plus the profile's jump points.
      for (int j = 0; j <= kPoints; ++j) {
        sup = std::max(sup, std::abs(psi(start * std::pow(10.0, 6.0 * j / kPoints))));
      }
      for (const double b : psi.breakpoints) {
        if (b >= start) {
          sup = std::max({sup, std::abs(psi(b)), std::abs(psi(std::nextafter(b, 1e300)))});
        }
      }
      products.push_back(family.a_at(n) * sup);
    }
    const std::size_t k = products.size();
    const double last = products[k - 1];
    const bool decreasing_tail = last < products[k - 2] || last == 0.0;
    if (last < kTolerance && decreasing_tail) {
      parts.push_back(Verdict::pass);
    } else if (last >= kTolerance && last >= products.front()) {
      parts.push_back(Verdict::fail);
    } else {
      parts.push_back(Verdict::inconclusive);
    }
    report.tail_products.push_back(std::move(products));
  }
  report.verdict = combine(parts);
  return report;
}

}  // namespace reflectsim
