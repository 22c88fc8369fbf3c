// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <cmath>

#include <boost/random/normal_distribution.hpp>

#include "reflectsim/error.hpp"
#include "reflectsim/philox.hpp"

namespace reflectsim {

/// Fixed-step simulation settings shared by every path of a run.
struct SimulationConfig {
  double horizon = 1.0;       ///< T
  double step = 1e-3;         ///< h, must divide T
  std::size_t num_paths = 1;
  std::uint64_t seed = 0;

  /// Steps starting inside |x| < refine_band are split into refine_factor
  /// bridge-conditioned substeps. Disabled when refine_factor == 1.
  double refine_band = 0.0;
  std::size_t refine_factor = 1;

  /// N = T / h. Throws ValidationError if the config is invalid.
  std::size_t num_steps() const;
  void validate() const;
};

/// Sequential N(0, 1) draws (Boost ziggurat) from one keyed Philox stream.
///
/// The first k draws are identical however many are requested, so a stream
/// can be consumed incrementally.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint32_t lane, std::uint32_t tag,
                 std::uint32_t offset = 0)
      : engine_(seed, lane, tag, offset) {}

  double operator()() { return normal_(engine_); }

 private:
  PhiloxStream engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Brownian increments of one path on the grid of a SimulationConfig.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::size_t path_index = 0;
  double step = 0.0;
  std::vector<double> increments;  ///< N values, each ~ N(0, h)
};

/// Values of a process on the uniform grid t_k = k h, k = 0..N.
struct GridPath {
  std::vector<double> times;
  std::vector<double> values;

  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  std::size_t size() const { return values.size(); }

  static GridPath on_grid(double step, std::vector<double> values);
};

/// Drift and diffusion of a one-dimensional SDE, plus the points where they
/// may jump (used to split quadrature intervals).
struct CoefficientPair {
  std::function<double(double)> drift;
  std::function<double(double)> diffusion;
  std::vector<double> breakpoints;
  /// Set when diffusion is known to be constant; lets the stepping loops
  /// skip the call.
  std::optional<double> constant_diffusion;

  double diffusion_at(double x) const {
    return constant_diffusion ? *constant_diffusion : diffusion(x);
  }

  static CoefficientPair constant(double drift, double diffusion);
};

NoiseStream generate_noise(std::uint64_t seed, std::size_t path_index,
                           const SimulationConfig& config);

/// Refinement increments for coarse step `step_index`: `out.size()` values
/// of variance h / out.size() that sum to `coarse_increment` (discrete
/// Brownian bridge). Keyed by (seed, path_index, step_index).
void bridge_substeps(std::uint64_t seed, std::size_t path_index, std::size_t step_index,
                     double coarse_increment, double step, std::span<double> out);

/// Explicit Euler-Maruyama: X_{k+1} = X_k + drift(X_k) h + diffusion(X_k) dW_k.
/// Throws NumericalError with the failing grid index if the state turns
/// non-finite.
GridPath simulate_sde(const CoefficientPair& coeffs, double z_start,
                      const SimulationConfig& config, const NoiseStream& noise);

/// Same scheme writing into `values` (size N + 1). Used by the diagnostics
/// loops to avoid per-path allocations.
void simulate_sde_into(const CoefficientPair& coeffs, double z_start,
                       const SimulationConfig& config, const NoiseStream& noise,
                       std::span<double> values);

/// Euler-Maruyama driven by the noise of generate_noise(seed, path_index, .)
/// drawn on the fly, without materializing the stream. Calls
/// visit(k, x_k) for k = 0..N and stops early when it returns false.
/// Produces the same values as simulate_sde on the same keys.
template <class Visit>
void euler_walk(const CoefficientPair& coeffs, double z_start, const SimulationConfig& config,
                std::uint64_t seed, std::size_t path_index, Visit&& visit);

/// Runs task(i) for i in [0, count) on `threads` workers. Tasks must not
/// share mutable state; the caller reduces results in index order.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task);

/// Worker count from REFLECTSIM_THREADS, falling back to 1.
std::size_t default_thread_count();

template <class Visit>
void euler_walk(const CoefficientPair& coeffs, double z_start, const SimulationConfig& config,
                std::uint64_t seed, std::size_t path_index, Visit&& visit) {
  const std::size_t n = config.num_steps();
  if (path_index > 0xFFFFFFFFull) {
    throw ValidationError("path_index exceeds 2^32 - 1");
  }
  const double h = config.step;
  const double scale = std::sqrt(h);
  const std::size_t m = config.refine_factor;
  const bool refine = m > 1 && config.refine_band > 0.0;
  std::vector<double> sub(refine ? m : 0);
  const double sub_h = h / static_cast<double>(m);
  GaussianStream gauss(seed, static_cast<std::uint32_t>(path_index), 0);

  double x = z_start;
  if (!visit(std::size_t{0}, x)) {
    return;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double dw = scale * gauss();
    if (refine && std::abs(x) < config.refine_band) {
      bridge_substeps(seed, path_index, k, dw, h, sub);
      for (const double w : sub) {
        x += coeffs.drift(x) * sub_h + coeffs.diffusion_at(x) * w;
      }
    } else {
      x += coeffs.drift(x) * h + coeffs.diffusion_at(x) * dw;
    }
    if (!std::isfinite(x)) {
      throw NumericalError("non-finite state in Euler-Maruyama", k + 1);
    }
    if (!visit(k + 1, x)) {
      return;
    }
  }
}

}  // namespace reflectsim
