// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>

#include "reflectsim/engine.hpp"

namespace reflectsim {

/// Reflected state Z >= 0 and its reflection term L (state units) on one grid.
struct ReflectedPath {
  GridPath z;
  GridPath l;
  /// Per-step pushes dl_k, l_{k+1} = l_k + dl_k. Kept separately so that
  /// z_{k+1} = pre_k + dl_k reproduces the state exactly.
  std::vector<double> dl;
};

/// Limit dynamics on [0, inf). Drift and diffusion only need to be meaningful
/// for x >= 0; the extended_* accessors freeze them at their value in 0 on
/// the negative half-line.
struct DiffusionSpec {
  std::function<double(double)> drift;
  std::function<double(double)> diffusion;
  double z0 = 0.0;
  /// Set by the constant factories; lets penalized members use fused kernels.
  std::optional<double> constant_drift;
  std::optional<double> constant_diffusion;

  double extended_drift(double x) const { return drift(x < 0.0 ? 0.0 : x); }
  double extended_diffusion(double x) const { return diffusion(x < 0.0 ? 0.0 : x); }

  /// (g, sigma) extended constant below 0, usable on the whole line.
  CoefficientPair coefficients() const;

  /// Reflected Brownian motion: g = 0, sigma = 1.
  static DiffusionSpec brownian(double z0);
  static DiffusionSpec constant(double drift, double diffusion, double z0);
};

/// Checks sigma > 0 and continuity of g and sigma on a probe grid over
/// [0, probe_max]; large changes between probes are bisected to tell steep
/// from discontinuous. Throws ValidationError.
void validate_spec(const DiffusionSpec& spec, double probe_max = 10.0,
                   std::size_t probes = 1001);

/// Half-line Skorokhod map: l_k = max(0, max_{j<=k} -x_j), z = x + l.
/// Throws ValidationError if x starts below 0.
ReflectedPath skorokhod_map(const GridPath& x);

/// Projected Euler scheme for the reflected SDE:
///   pre = Z_k + g(Z_k) h + sigma(Z_k) dW_k,
///   Z_{k+1} = max(0, pre),  dL_k = max(0, -pre).
/// Grid refinement in the config is ignored here so the step identity
/// Z_{k+1} - Z_k = g h + sigma dW + dL holds on every coarse step.
ReflectedPath simulate_reflected(const DiffusionSpec& spec, const SimulationConfig& config,
                                 const NoiseStream& noise);

/// Buffer variant of simulate_reflected; `z` and `l` hold N + 1 values.
void simulate_reflected_into(const DiffusionSpec& spec, const SimulationConfig& config,
                             const NoiseStream& noise, std::span<double> z,
                             std::span<double> l, std::span<double> dl);

}  // namespace reflectsim
