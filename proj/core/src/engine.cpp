// SPDX-License-Identifier: Apache-2.0
#include "reflectsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "reflectsim/error.hpp"

namespace reflectsim {

namespace {

constexpr std::uint32_t kCoarseTag = 0;
constexpr std::uint32_t kBridgeTag = 1;

std::uint32_t lane_of(std::size_t path_index) {
  if (path_index > 0xFFFFFFFFull) {
    throw ValidationError("path_index exceeds 2^32 - 1");
  }
  return static_cast<std::uint32_t>(path_index);
}

}  // namespace

std::size_t SimulationConfig::num_steps() const {
  validate();
  return static_cast<std::size_t>(std::llround(horizon / step));
}

void SimulationConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("horizon must be positive and finite");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ValidationError("step must be positive and finite");
  }
  const double ratio = horizon / step;
  if (ratio > 4.0e9) {
    throw ValidationError("horizon / step exceeds the supported grid size");
  }
  const auto n = std::llround(ratio);
  if (n < 1 || std::abs(static_cast<double>(n) * step - horizon) >= 1e-12 * horizon) {
    throw ValidationError("step must divide horizon into an integer number of steps");
  }
  if (num_paths < 1) {
    throw ValidationError("num_paths must be at least 1");
  }
  if (refine_factor < 1) {
    throw ValidationError("refine_factor must be at least 1");
  }
  if (!(refine_band >= 0.0)) {
    throw ValidationError("refine_band must be nonnegative");
  }
}

GridPath GridPath::on_grid(double step, std::vector<double> values) {
  GridPath path;
  path.times.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    path.times[k] = static_cast<double>(k) * step;
  }
  path.values = std::move(values);
  return path;
}

CoefficientPair CoefficientPair::constant(double drift, double diffusion) {
  return {[drift](double) { return drift; }, [diffusion](double) { return diffusion; }, {},
          diffusion};
}

NoiseStream generate_noise(std::uint64_t seed, std::size_t path_index,
                           const SimulationConfig& config) {
  const std::size_t n = config.num_steps();
  const double scale = std::sqrt(config.step);
  GaussianStream gauss(seed, lane_of(path_index), kCoarseTag);
  NoiseStream noise{seed, path_index, config.step, std::vector<double>(n)};
  for (auto& dw : noise.increments) {
    dw = scale * gauss();
  }
  return noise;
}

void bridge_substeps(std::uint64_t seed, std::size_t path_index, std::size_t step_index,
                     double coarse_increment, double step, std::span<double> out) {
  if (out.empty()) {
    return;
  }
  if (step_index > 0xFFFFFFFFull) {
    throw ValidationError("step_index exceeds 2^32 - 1");
  }
  const double m = static_cast<double>(out.size());
  const double scale = std::sqrt(step / m);
  GaussianStream gauss(seed, lane_of(path_index), kBridgeTag,
                       static_cast<std::uint32_t>(step_index));
  double sum = 0.0;
  for (auto& w : out) {
    w = scale * gauss();
    sum += w;
  }
  const double shift = (coarse_increment - sum) / m;
  for (auto& w : out) {
    w += shift;
  }
}

void simulate_sde_into(const CoefficientPair& coeffs, double z_start,
                       const SimulationConfig& config, const NoiseStream& noise,
                       std::span<double> values) {
  const std::size_t n = config.num_steps();
  if (noise.increments.size() != n || noise.step != config.step) {
    throw ValidationError("noise stream was generated for a different grid");
  }
  if (values.size() != n + 1) {
    throw ValidationError("output span must hold N + 1 values");
  }
  const double h = config.step;
  const std::size_t m = config.refine_factor;
  const bool refine = m > 1 && config.refine_band > 0.0;
  std::vector<double> sub(refine ? m : 0);
  const double sub_h = h / static_cast<double>(m);

  double x = z_start;
  values[0] = x;
  for (std::size_t k = 0; k < n; ++k) {
    const double dw = noise.increments[k];
    if (refine && std::abs(x) < config.refine_band) {
      bridge_substeps(noise.seed, noise.path_index, k, dw, h, sub);
      for (const double w : sub) {
        x += coeffs.drift(x) * sub_h + coeffs.diffusion_at(x) * w;
      }
    } else {
      x += coeffs.drift(x) * h + coeffs.diffusion_at(x) * dw;
    }
    if (!std::isfinite(x)) {
      throw NumericalError("non-finite state in Euler-Maruyama", k + 1);
    }
    values[k + 1] = x;
  }
}

GridPath simulate_sde(const CoefficientPair& coeffs, double z_start,
                      const SimulationConfig& config, const NoiseStream& noise) {
  std::vector<double> values(config.num_steps() + 1);
  simulate_sde_into(coeffs, z_start, config, noise, values);
  return GridPath::on_grid(config.step, std::move(values));
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) {
        return;
      }
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  pool.clear();
  if (failure) {
    std::rethrow_exception(failure);
  }
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("REFLECTSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) {
      return static_cast<std::size_t>(v);
    }
  }
  return 1;
}

}  // namespace reflectsim
