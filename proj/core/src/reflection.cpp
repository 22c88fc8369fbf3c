// SPDX-License-Identifier: Apache-2.0
#include "reflectsim/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "reflectsim/error.hpp"

namespace reflectsim {

CoefficientPair DiffusionSpec::coefficients() const {
  CoefficientPair out{[g = drift](double x) { return g(x < 0.0 ? 0.0 : x); },
                      [s = diffusion](double x) { return s(x < 0.0 ? 0.0 : x); },
                      {},
                      constant_diffusion};
  if (constant_drift) {
    out.drift = [g = *constant_drift](double) { return g; };
  }
  return out;
}

DiffusionSpec DiffusionSpec::brownian(double z0) { return constant(0.0, 1.0, z0); }

DiffusionSpec DiffusionSpec::constant(double drift, double diffusion, double z0) {
  return {[drift](double) { return drift; }, [diffusion](double) { return diffusion; }, z0,
          drift, diffusion};
}

namespace {

// True if fn jumps inside [lo, hi]: bisect toward the half with the larger
// change; a continuous function's change vanishes with the width.
bool jumps_between(const std::function<double(double)>& fn, double lo, double hi, double tol) {
  double flo = fn(lo);
  double fhi = fn(hi);
  for (int i = 0; i < 60 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++i) {
    if (std::abs(fhi - flo) <= tol * (1.0 + std::abs(flo))) {
      return false;
    }
    const double mid = 0.5 * (lo + hi);
    const double fmid = fn(mid);
    if (std::abs(fmid - flo) >= std::abs(fhi - fmid)) {
      hi = mid;
      fhi = fmid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return std::abs(fhi - flo) > tol * (1.0 + std::abs(flo));
}

}  // namespace

void validate_spec(const DiffusionSpec& spec, double probe_max, std::size_t probes) {
  if (!spec.drift || !spec.diffusion) {
    throw ValidationError("diffusion spec needs both drift and diffusion");
  }
  if (!(spec.z0 >= 0.0) || !std::isfinite(spec.z0)) {
    throw ValidationError("z0 must be finite and nonnegative");
  }
  if (probes < 2 || !(probe_max > 0.0)) {
    throw ValidationError("validate_spec needs >= 2 probes on a positive range");
  }
  constexpr double kJump = 1e-4;
  double prev = 0.0;
  for (std::size_t i = 0; i < probes; ++i) {
    const double x = probe_max * static_cast<double>(i) / static_cast<double>(probes - 1);
    const double g = spec.drift(x);
    const double s = spec.diffusion(x);
    if (!std::isfinite(g) || !std::isfinite(s)) {
      throw ValidationError("coefficients must be finite at x = " + std::to_string(x));
    }
    if (!(s > 0.0)) {
      throw ValidationError("diffusion must be positive at x = " + std::to_string(x));
    }
    if (i > 0 && (jumps_between(spec.drift, prev, x, kJump) ||
                  jumps_between(spec.diffusion, prev, x, kJump))) {
      throw ValidationError("coefficients look discontinuous on [" + std::to_string(prev) + ", " +
                            std::to_string(x) + "]");
    }
    prev = x;
  }
}

ReflectedPath skorokhod_map(const GridPath& x) {
  if (x.values.empty()) {
    throw ValidationError("skorokhod_map needs a nonempty path");
  }
  if (x.values.front() < 0.0) {
    throw ValidationError("skorokhod_map needs x(0) >= 0");
  }
  ReflectedPath out{x, x, std::vector<double>(x.values.size() - 1)};
  double running = 0.0;
  for (std::size_t k = 0; k < x.values.size(); ++k) {
    const double next = std::max(running, -x.values[k]);
    if (k > 0) {
      out.dl[k - 1] = next - running;
    }
    running = next;
    out.l.values[k] = running;
    out.z.values[k] = x.values[k] + running;
  }
  return out;
}

void simulate_reflected_into(const DiffusionSpec& spec, const SimulationConfig& config,
                             const NoiseStream& noise, std::span<double> z,
                             std::span<double> l, std::span<double> dl) {
  const std::size_t n = config.num_steps();
  if (noise.increments.size() != n || noise.step != config.step) {
    throw ValidationError("noise stream was generated for a different grid");
  }
  if (z.size() != n + 1 || l.size() != n + 1 || dl.size() != n) {
    throw ValidationError("output spans must hold N + 1 values");
  }
  if (!(spec.z0 >= 0.0)) {
    throw ValidationError("reflected start must be nonnegative");
  }
  const double h = config.step;
  double zk = spec.z0;
  double lk = 0.0;
  z[0] = zk;
  l[0] = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pre = zk + spec.drift(zk) * h + spec.diffusion(zk) * noise.increments[k];
    if (!std::isfinite(pre)) {
      throw NumericalError("non-finite state in projected Euler", k + 1);
    }
    if (pre < 0.0) {
      dl[k] = -pre;
      lk += -pre;
      zk = 0.0;
    } else {
      dl[k] = 0.0;
      zk = pre;
    }
    z[k + 1] = zk;
    l[k + 1] = lk;
  }
}

ReflectedPath simulate_reflected(const DiffusionSpec& spec, const SimulationConfig& config,
                                 const NoiseStream& noise) {
  const std::size_t n = config.num_steps();
  std::vector<double> z(n + 1);
  std::vector<double> l(n + 1);
  std::vector<double> dl(n);
  simulate_reflected_into(spec, config, noise, z, l, dl);
  return {GridPath::on_grid(config.step, std::move(z)),
          GridPath::on_grid(config.step, std::move(l)), std::move(dl)};
}

}  // namespace reflectsim
