// SPDX-License-Identifier: Apache-2.0
#include "reflectsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "reflectsim/error.hpp"

namespace reflectsim {

double ks_statistic(std::span<const double> sorted_sample,
                    const std::function<double(double)>& cdf) {
  if (sorted_sample.empty()) {
    throw ValidationError("ks_statistic needs a nonempty sample");
  }
  const double m = static_cast<double>(sorted_sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_sample.size(); ++i) {
    const double f = cdf(sorted_sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("ks_two_sample needs nonempty samples");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) {
      ++i;
    }
    while (j < b.size() && b[j] <= x) {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double rbm_marginal_cdf(double z0, double t, double x) {
  if (!(t > 0.0)) {
    throw ValidationError("rbm_marginal_cdf needs t > 0");
  }
  if (x < 0.0) {
    return 0.0;
  }
  const double s = std::sqrt(t);
  return standard_normal_cdf((x - z0) / s) - standard_normal_cdf((-x - z0) / s);
}

double binomial_se(double p, std::size_t m) {
  if (m == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::sqrt(p * (1.0 - p) / static_cast<double>(m));
}

namespace {

struct PathStats {
  double terminal = 0.0;
  double minimum = 0.0;
  double coupled_sup = 0.0;
  bool failed = false;
};

}  // namespace

StudyReport convergence_study(const PenaltyFamily& family, const DiffusionSpec& spec,
                              const std::vector<int>& n_list, double epsilon,
                              const SimulationConfig& config, const StudyOptions& options) {
  config.validate();
  if (n_list.empty()) {
    throw ValidationError("convergence_study needs at least one n");
  }
  if (!(epsilon > 0.0)) {
    throw ValidationError("epsilon must be positive");
  }
  validate_family(family, n_list);

  StudyReport report;
  report.family = family.describe();
  report.epsilon = epsilon;
  if (options.check_conditions) {
    if (n_list.size() >= 3 && std::is_sorted(n_list.begin(), n_list.end()) &&
        std::adjacent_find(n_list.begin(), n_list.end()) == n_list.end()) {
      const auto conditions = check_theorem1_conditions(family, spec, n_list);
      for (const auto& c : conditions.conditions) {
        if (c.verdict == Verdict::fail) {
          report.warnings.push_back("condition " + c.name + " fails for this schedule");
        }
      }
    } else {
      report.warnings.push_back("condition checks skipped: need >= 3 increasing n");
    }
  }

  std::vector<PenaltyMember> members;
  for (const int n : n_list) {
    members.push_back(member(family, n));
  }
  const std::size_t paths = config.num_paths;
  const std::size_t steps = config.num_steps();
  const std::size_t width = members.size();
  std::vector<PathStats> stats(paths * width);
  std::vector<double> reflected_terminal(paths);
  std::vector<char> reflected_failed(paths, 0);

  parallel_for(paths, options.threads, [&](std::size_t p) {
    const NoiseStream noise = generate_noise(config.seed, p, config);
    std::vector<double> z(steps + 1);
    std::vector<double> l(steps + 1);
    std::vector<double> dl(steps);
    std::vector<double> x(steps + 1);
    try {
      simulate_reflected_into(spec, config, noise, z, l, dl);
    } catch (const NumericalError&) {
      reflected_failed[p] = 1;
      for (std::size_t j = 0; j < width; ++j) {
        stats[p * width + j].failed = true;
      }
      return;
    }
    reflected_terminal[p] = z.back();
    for (std::size_t j = 0; j < width; ++j) {
      PathStats& out = stats[p * width + j];
      try {
        simulate_sde_into(members[j].coeffs, members[j].start, config, noise, x);
      } catch (const NumericalError&) {
        out.failed = true;
        continue;
      }
      double lowest = x[0];
      double sup = 0.0;
      for (std::size_t k = 0; k <= steps; ++k) {
        lowest = std::min(lowest, x[k]);
        sup = std::max(sup, std::abs(x[k] - z[k]));
      }
      out.terminal = x.back();
      out.minimum = lowest;
      out.coupled_sup = sup;
    }
  });

  std::vector<double> target_sample;
  if (!options.target_cdf) {
    for (std::size_t p = 0; p < paths; ++p) {
      if (!reflected_failed[p]) {
        target_sample.push_back(reflected_terminal[p]);
      }
    }
    std::sort(target_sample.begin(), target_sample.end());
  }

  for (std::size_t j = 0; j < width; ++j) {
    StudyRow row;
    row.n = n_list[j];
    row.h = config.step;
    row.seed = config.seed;
    std::vector<double> terminal;
    terminal.reserve(paths);
    std::size_t excursions = 0;
    double sup_sum = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
      const PathStats& s = stats[p * width + j];
      if (s.failed) {
        ++row.failed;
        continue;
      }
      terminal.push_back(s.terminal);
      if (s.minimum <= -epsilon) {
        ++excursions;
      }
      sup_sum += s.coupled_sup;
    }
    row.paths = terminal.size();
    if (static_cast<double>(row.failed) > 1e-3 * static_cast<double>(paths)) {
      report.valid = false;
    }
    if (row.paths == 0) {
      row.ks = row.excursion_prob = row.excursion_se = row.coupled_sup_mean =
          std::numeric_limits<double>::quiet_NaN();
      report.rows.push_back(row);
      continue;
    }
    std::sort(terminal.begin(), terminal.end());
    if (options.target_cdf) {
      row.ks = ks_statistic(terminal, options.target_cdf);
    } else if (!target_sample.empty()) {
      row.ks = ks_two_sample(terminal, target_sample);
    } else {
      row.ks = std::numeric_limits<double>::quiet_NaN();
    }
    row.excursion_prob = static_cast<double>(excursions) / static_cast<double>(row.paths);
    row.excursion_se = binomial_se(row.excursion_prob, row.paths);
    row.coupled_sup_mean = sup_sum / static_cast<double>(row.paths);
    report.rows.push_back(row);
  }
  return report;
}

double skew_alpha(double k) {
  // e^{2k} / (1 + e^{2k}) written to stay finite for large |k|.
  return 1.0 / (1.0 + std::exp(-2.0 * k));
}

ProbabilityEstimate sign_probability(const CoefficientPair& coeffs, double z0,
                                     const SimulationConfig& config, std::size_t threads) {
  config.validate();
  std::vector<char> positive(config.num_paths, 0);
  parallel_for(config.num_paths, threads, [&](std::size_t p) {
    double last = z0;
    euler_walk(coeffs, z0, config, config.seed, p, [&](std::size_t, double x) {
      last = x;
      return true;
    });
    positive[p] = last > 0.0 ? 1 : 0;
  });
  std::size_t count = 0;
  for (const char v : positive) {
    count += static_cast<std::size_t>(v);
  }
  ProbabilityEstimate out;
  out.paths = config.num_paths;
  out.estimate = static_cast<double>(count) / static_cast<double>(out.paths);
  out.se = binomial_se(out.estimate, out.paths);
  return out;
}

ProbabilityEstimate skew_limit_estimate(double k, double a, const SimulationConfig& config,
                                        std::size_t threads) {
  if (!(k > 0.0)) {
    throw ValidationError("skew parameter k must be positive");
  }
  if (!(a >= 100.0)) {
    throw ValidationError("skew estimate needs a >= 100");
  }
  const double c = k / a;
  CoefficientPair coeffs{[a, c](double x) { return (x > -c && x < 0.0) ? a : 0.0; },
                         [](double) { return 1.0; },
                         {-c, 0.0},
                         1.0};
  return sign_probability(coeffs, 0.0, config, threads);
}

FirstPassageEstimate first_passage_frequency(const CoefficientPair& coeffs, double start,
                                             double low, double high,
                                             const SimulationConfig& config,
                                             std::size_t threads) {
  config.validate();
  if (!(low < start && start < high)) {
    throw ValidationError("first passage needs low < start < high");
  }
  // 0: unresolved, 1: low first, 2: high first
  std::vector<char> outcome(config.num_paths, 0);
  parallel_for(config.num_paths, threads, [&](std::size_t p) {
    char result = 0;
    euler_walk(coeffs, start, config, config.seed, p, [&](std::size_t, double x) {
      if (x <= low) {
        result = 1;
        return false;
      }
      if (x >= high) {
        result = 2;
        return false;
      }
      return true;
    });
    outcome[p] = result;
  });
  FirstPassageEstimate out;
  out.paths = config.num_paths;
  std::size_t hits = 0;
  for (const char o : outcome) {
    hits += o == 1 ? 1 : 0;
    out.unresolved += o == 0 ? 1 : 0;
  }
  out.frequency = static_cast<double>(hits) / static_cast<double>(out.paths);
  out.se = binomial_se(out.frequency, out.paths);
  return out;
}

void ModulusQuery::validate() const {
  if (!(horizon > 0.0)) {
    throw ValidationError("modulus horizon T must be positive");
  }
  if (!(delta > 0.0 && delta <= horizon)) {
    throw ValidationError("modulus delta must lie in (0, T]");
  }
  if (!(distance > 0.0)) {
    throw ValidationError("modulus distance D must be positive");
  }
  if (!(diffusion_bound > 0.0)) {
    throw ValidationError("modulus diffusion bound K must be positive");
  }
  if (!(distance <= beta - alpha)) {
    throw ValidationError("modulus interval must satisfy D <= beta - alpha");
  }
}

double modulus_bound(const ModulusQuery& q) {
  const double k2 = q.diffusion_bound * q.diffusion_bound;
  return kModulusKappa * q.horizon * k2 * k2 * q.delta / (q.distance * q.distance);
}

bool modulus_event_occurs(std::span<const double> values, double step, const ModulusQuery& q) {
  if (!(step > 0.0) || step > q.delta / 4.0 * (1.0 + 1e-12)) {
    throw ValidationError("grid too coarse for the modulus scan: need step <= delta / 4");
  }
  const auto window = static_cast<std::size_t>(std::floor(q.delta / step + 1e-9));
  auto inside = [&](double v) { return v >= q.alpha && v <= q.beta; };
  std::deque<std::size_t> maxima;  // decreasing values
  std::deque<std::size_t> minima;  // increasing values
  for (std::size_t j = 0; j < values.size(); ++j) {
    while (!maxima.empty() && maxima.front() + window < j) {
      maxima.pop_front();
    }
    while (!minima.empty() && minima.front() + window < j) {
      minima.pop_front();
    }
    const double v = values[j];
    if (!inside(v)) {
      continue;
    }
    if (!maxima.empty() && values[maxima.front()] - v >= q.distance) {
      return true;
    }
    if (!minima.empty() && v - values[minima.front()] >= q.distance) {
      return true;
    }
    while (!maxima.empty() && values[maxima.back()] <= v) {
      maxima.pop_back();
    }
    maxima.push_back(j);
    while (!minima.empty() && values[minima.back()] >= v) {
      minima.pop_back();
    }
    minima.push_back(j);
  }
  return false;
}

namespace {

ModulusEstimate summarize(std::size_t hits, std::size_t paths, const ModulusQuery& q) {
  ModulusEstimate out;
  out.paths = paths;
  out.frequency = paths ? static_cast<double>(hits) / static_cast<double>(paths) : 0.0;
  out.se = binomial_se(out.frequency, paths);
  out.raw_bound = modulus_bound(q);
  out.bound = std::min(1.0, out.raw_bound);
  return out;
}

}  // namespace

ModulusEstimate modulus_event_frequency(std::span<const GridPath> paths, const ModulusQuery& q) {
  q.validate();
  if (paths.empty()) {
    throw ValidationError("modulus frequency needs at least one path");
  }
  const double step = paths.front().step();
  std::size_t hits = 0;
  for (const auto& path : paths) {
    if (path.values.size() != paths.front().values.size() ||
        std::abs(path.step() - step) > 1e-12 * step) {
      throw ValidationError("modulus paths must share one grid");
    }
    hits += modulus_event_occurs(path.values, step, q) ? 1 : 0;
  }
  return summarize(hits, paths.size(), q);
}

ModulusEstimate modulus_study(const CoefficientPair& coeffs, double z0,
                              const SimulationConfig& config, const ModulusQuery& q,
                              std::size_t threads) {
  config.validate();
  q.validate();
  if (config.step > q.delta / 4.0 * (1.0 + 1e-12)) {
    throw ValidationError("grid too coarse for the modulus scan: need step <= delta / 4");
  }
  const std::size_t steps = config.num_steps();
  std::vector<char> event(config.num_paths, 0);
  parallel_for(config.num_paths, threads, [&](std::size_t p) {
    std::vector<double> values(steps + 1);
    euler_walk(coeffs, z0, config, config.seed, p, [&](std::size_t k, double x) {
      values[k] = x;
      return true;
    });
    event[p] = modulus_event_occurs(values, config.step, q) ? 1 : 0;
  });
  std::size_t hits = 0;
  for (const char e : event) {
    hits += static_cast<std::size_t>(e);
  }
  return summarize(hits, config.num_paths, q);
}

}  // namespace reflectsim
