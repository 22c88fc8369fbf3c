// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "reflectsim/diagnostics.hpp"
#include "reflectsim/penalty.hpp"
#include "reflectsim/reflection.hpp"
#include "reflectsim/scale.hpp"

using namespace reflectsim;

namespace {

SimulationConfig grid(std::int64_t steps) {
  return {1.0, 1.0 / static_cast<double>(steps), 1, 1};
}

void BM_GenerateNoise(benchmark::State& state) {
  const auto cfg = grid(state.range(0));
  std::size_t path = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_noise(cfg.seed, path++, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateNoise)->Arg(1 << 14);

void BM_EulerWallMember(benchmark::State& state) {
  const auto cfg = grid(state.range(0));
  const auto family = PenaltyFamily::for_target(FamilyKind::wall_left, Schedule::constant(500.0),
                                                Schedule::constant(0.1), DiffusionSpec::brownian(1.0));
  const auto m = member(family, 1);
  const auto noise = generate_noise(1, 0, cfg);
  std::vector<double> x(cfg.num_steps() + 1);
  for (auto _ : state) {
    simulate_sde_into(m.coeffs, m.start, cfg, noise, x);
    benchmark::DoNotOptimize(x.back());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerWallMember)->Arg(1 << 14);

void BM_EulerWalkStreaming(benchmark::State& state) {
  const auto cfg = grid(state.range(0));
  const auto coeffs = CoefficientPair::constant(0.0, 1.0);
  std::size_t path = 0;
  for (auto _ : state) {
    double last = 0.0;
    euler_walk(coeffs, 0.0, cfg, 1, path++, [&](std::size_t, double x) {
      last = x;
      return true;
    });
    benchmark::DoNotOptimize(last);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerWalkStreaming)->Arg(1 << 14);

void BM_ProjectedEuler(benchmark::State& state) {
  const auto cfg = grid(state.range(0));
  const auto spec = DiffusionSpec::brownian(0.1);
  const auto noise = generate_noise(1, 0, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_reflected(spec, cfg, noise));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ProjectedEuler)->Arg(1 << 14);

void BM_SkorokhodMap(benchmark::State& state) {
  const auto cfg = grid(state.range(0));
  const auto path = simulate_sde(CoefficientPair::constant(0.0, 1.0), 0.0, cfg,
                                 generate_noise(1, 0, cfg));
  for (auto _ : state) {
    benchmark::DoNotOptimize(skorokhod_map(path));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SkorokhodMap)->Arg(1 << 14);

void BM_ScaleFunctionWall(benchmark::State& state) {
  const auto family = PenaltyFamily::for_target(
      FamilyKind::wall_left, Schedule::constant(static_cast<double>(state.range(0))),
      Schedule::constant(0.5), DiffusionSpec::brownian(1.0));
  const auto m = member(family, 1);
  const ScaleConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scale_function(m.coeffs, -0.7, cfg));
  }
}
BENCHMARK(BM_ScaleFunctionWall)->Arg(10)->Arg(1000);

void BM_ModulusScan(benchmark::State& state) {
  const SimulationConfig cfg{0.01, 1e-6, 1, 3};
  const auto path =
      simulate_sde(CoefficientPair::constant(0.0, 1.0), 0.0, cfg, generate_noise(3, 0, cfg));
  const ModulusQuery q{1e-5, 0.5, -1.0, 1.0, 1.0, 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(modulus_event_occurs(path.values, cfg.step, q));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(path.size()));
}
BENCHMARK(BM_ModulusScan);

}  // namespace
