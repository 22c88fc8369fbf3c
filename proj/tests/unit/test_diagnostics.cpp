// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "reflectsim/diagnostics.hpp"
#include "reflectsim/error.hpp"
#include "reflectsim/reflection.hpp"

using namespace reflectsim;

namespace {

double inverse_folded_normal(double p) {
  // Bisection on 2 Phi(x) - 1 = p.
  double lo = 0.0;
  double hi = 20.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (2.0 * standard_normal_cdf(mid) - 1.0 < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// O(N * window) reference for the modulus event.
bool brute_force_modulus(const std::vector<double>& v, double step, const ModulusQuery& q) {
  const auto window = static_cast<std::size_t>(std::floor(q.delta / step + 1e-9));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < q.alpha || v[i] > q.beta) {
      continue;
    }
    for (std::size_t j = i; j < v.size() && j <= i + window; ++j) {
      if (v[j] >= q.alpha && v[j] <= q.beta && std::abs(v[j] - v[i]) >= q.distance) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST(KsStatistic, SinglePoint) {
  const std::vector<double> x{0.0};
  EXPECT_EQ(ks_statistic(x, [](double) { return 0.5; }), 0.5);
}

TEST(KsStatistic, ExactQuantilesGiveHalfSpacing) {
  const std::size_t m = 100;
  std::vector<double> x;
  for (std::size_t i = 1; i <= m; ++i) {
    x.push_back(inverse_folded_normal((static_cast<double>(i) - 0.5) / m));
  }
  const double d = ks_statistic(x, [](double v) { return rbm_marginal_cdf(0.0, 1.0, v); });
  EXPECT_NEAR(d, 0.005, 1e-12);
  EXPECT_THROW(ks_statistic(std::vector<double>{}, [](double) { return 0.0; }), ValidationError);
}

TEST(KsStatistic, SampleFromTargetUsuallyBelowCriticalValue) {
  const std::size_t m = 100000;
  GaussianStream g(77, 0, 0);
  std::vector<double> x(m);
  for (auto& v : x) {
    v = g();
  }
  std::sort(x.begin(), x.end());
  const double d = ks_statistic(x, standard_normal_cdf);
  // 99.9% Kolmogorov quantile; an exceedance is flagged, not failed.
  const bool flagged = d >= 1.95 / std::sqrt(static_cast<double>(m));
  RecordProperty("ks_flagged", flagged ? "yes" : "no");
  EXPECT_LT(d, 0.02);
}

TEST(KsTwoSample, IdenticalAndShifted) {
  const std::vector<double> a{1, 2, 3, 4};
  EXPECT_EQ(ks_two_sample(a, a), 0.0);
  const std::vector<double> b{11, 12, 13, 14};
  EXPECT_EQ(ks_two_sample(a, b), 1.0);
  const std::vector<double> c{1, 2, 5, 6};
  EXPECT_EQ(ks_two_sample(a, c), 0.5);
}

TEST(RbmMarginalCdf, ClosedForms) {
  EXPECT_NEAR(rbm_marginal_cdf(1.0, 1.0, 1.0), 0.5 - standard_normal_cdf(-2.0), 1e-15);
  EXPECT_NEAR(rbm_marginal_cdf(1.0, 1.0, 1.0), 0.47725, 1e-5);
  for (const double x : {0.1, 0.5, 2.0}) {
    EXPECT_NEAR(rbm_marginal_cdf(0.0, 2.0, x), 2.0 * standard_normal_cdf(x / std::sqrt(2.0)) - 1.0,
                1e-15);
  }
  EXPECT_EQ(rbm_marginal_cdf(0.0, 1.0, 50.0), 1.0);
  EXPECT_EQ(rbm_marginal_cdf(0.5, 1.0, -0.1), 0.0);
  EXPECT_THROW(rbm_marginal_cdf(0.0, 0.0, 1.0), ValidationError);
}

TEST(RbmMarginalCdf, MatchesSkorokhodMonteCarlo) {
  const SimulationConfig cfg{1.0, 1e-4, 20000, 5150};
  std::vector<char> below(cfg.num_paths, 0);
  parallel_for(cfg.num_paths, default_thread_count(), [&](std::size_t p) {
    const auto noise = generate_noise(cfg.seed, p, cfg);
    const auto path = simulate_sde(CoefficientPair::constant(0.0, 1.0), 1.0, cfg, noise);
    below[p] = skorokhod_map(path).z.values.back() <= 1.0 ? 1 : 0;
  });
  const double p_hat =
      static_cast<double>(std::count(below.begin(), below.end(), 1)) / cfg.num_paths;
  const double p = rbm_marginal_cdf(1.0, 1.0, 1.0);
  EXPECT_LE(std::abs(p_hat - p), 3.0 * binomial_se(p, cfg.num_paths)) << p_hat;
}

TEST(ConvergenceStudy, UnpenalizedFamilyFarFromBoundaryMatchesTarget) {
  const auto spec = DiffusionSpec::brownian(6.0);
  const auto f = PenaltyFamily::for_target(FamilyKind::scaled_profile, Schedule::power(1.0, 1.0),
                                           Schedule::power(1.0, -0.5), spec, Profile::zero());
  const SimulationConfig cfg{1.0, 1e-2, 2000, 9};
  StudyOptions opts;
  opts.check_conditions = false;
  const auto r = convergence_study(f, spec, {1, 2}, 0.2, cfg, opts);
  ASSERT_TRUE(r.valid);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.ks, 0.0);
    EXPECT_EQ(row.coupled_sup_mean, 0.0);
    EXPECT_EQ(row.excursion_prob, 0.0);
    EXPECT_EQ(row.paths, 2000u);
    EXPECT_EQ(row.seed, 9u);
    EXPECT_EQ(row.h, 1e-2);
  }
}

TEST(ConvergenceStudy, UnpenalizedCouplingGapIsTheReflectionTerm) {
  // With f_n = g = 0 and sigma = 1, X_n - Z = -L on the shared grid, so the
  // coupled sup distance is the terminal reflection term.
  const auto spec = DiffusionSpec::brownian(0.5);
  const auto f = PenaltyFamily::for_target(FamilyKind::scaled_profile, Schedule::power(1.0, 1.0),
                                           Schedule::power(1.0, -0.5), spec, Profile::zero());
  const SimulationConfig cfg{1.0, 1e-3, 500, 10};
  StudyOptions opts;
  opts.check_conditions = false;
  const auto r = convergence_study(f, spec, {1}, 0.2, cfg, opts);
  double l_sum = 0.0;
  std::size_t excursions = 0;
  for (std::size_t p = 0; p < cfg.num_paths; ++p) {
    const auto noise = generate_noise(cfg.seed, p, cfg);
    const auto z = simulate_reflected(spec, cfg, noise);
    l_sum += z.l.values.back();
    const auto x = simulate_sde(spec.coefficients(), spec.z0, cfg, noise);
    excursions += *std::min_element(x.values.begin(), x.values.end()) <= -0.2 ? 1 : 0;
  }
  EXPECT_NEAR(r.rows[0].coupled_sup_mean, l_sum / cfg.num_paths, 1e-12);
  EXPECT_EQ(r.rows[0].excursion_prob, static_cast<double>(excursions) / cfg.num_paths);
  EXPECT_EQ(r.rows[0].excursion_se, binomial_se(r.rows[0].excursion_prob, cfg.num_paths));
}

TEST(ConvergenceStudy, IndependentOfThreadCount) {
  const auto spec = DiffusionSpec::brownian(1.0);
  const auto f = PenaltyFamily::for_target(FamilyKind::wall_left, Schedule::power(10.0, 1.0),
                                           Schedule::power(1.0, -0.5), spec);
  const SimulationConfig cfg{1.0, 1e-3, 800, 11};
  StudyOptions one;
  one.threads = 1;
  one.target_cdf = [](double x) { return rbm_marginal_cdf(1.0, 1.0, x); };
  StudyOptions many = one;
  many.threads = 4;
  const auto a = convergence_study(f, spec, {1, 10, 100}, 0.2, cfg, one);
  const auto b = convergence_study(f, spec, {1, 10, 100}, 0.2, cfg, many);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].ks, b.rows[i].ks);
    EXPECT_EQ(a.rows[i].excursion_prob, b.rows[i].excursion_prob);
    EXPECT_EQ(a.rows[i].coupled_sup_mean, b.rows[i].coupled_sup_mean);
  }
  EXPECT_EQ(a.family, "wall_left a_n=10*n^1 c_n=1*n^-0.5");
}

TEST(ConvergenceStudy, WarnsOnFailingConditionsAndCountsFailures) {
  const auto spec = DiffusionSpec::brownian(1.0);
  auto f = PenaltyFamily::for_target(FamilyKind::wall_left, Schedule::power(1.0, 1.0),
                                     Schedule::power(1.0, -2.0), spec);
  const SimulationConfig cfg{0.1, 1e-2, 100, 12};
  const auto warned = convergence_study(f, spec, {10, 100, 1000}, 0.2, cfg);
  EXPECT_FALSE(warned.warnings.empty());
  EXPECT_TRUE(warned.valid);

  f.sigma_schedule = [](int n, double) {
    return n == 2 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  StudyOptions opts;
  opts.check_conditions = false;
  const auto broken = convergence_study(f, spec, {1, 2}, 0.2, cfg, opts);
  EXPECT_FALSE(broken.valid);
  EXPECT_EQ(broken.rows[0].failed, 0u);
  EXPECT_EQ(broken.rows[1].failed, cfg.num_paths);
  EXPECT_EQ(broken.rows[1].paths, 0u);
}

TEST(Skew, AlphaValues) {
  EXPECT_NEAR(skew_alpha(1.0), std::exp(2.0) / (1.0 + std::exp(2.0)), 1e-15);
  EXPECT_NEAR(skew_alpha(1.0), 0.88080, 1e-5);
  EXPECT_NEAR(skew_alpha(5.0), 0.99995, 1e-5);
  EXPECT_EQ(skew_alpha(0.0), 0.5);
  EXPECT_THROW(skew_limit_estimate(0.0, 200.0, SimulationConfig{}), ValidationError);
  EXPECT_THROW(skew_limit_estimate(1.0, 50.0, SimulationConfig{}), ValidationError);
}

// Skew BM built by flipping each excursion of |W| positive with probability
// alpha: its sign at T is the flip of the last excursion.
TEST(Skew, ExcursionFlipConstructionHasPositiveMassAlpha) {
  const double alpha = skew_alpha(1.0);
  const SimulationConfig cfg{1.0, 1e-3, 20000, 31};
  std::vector<char> positive(cfg.num_paths, 0);
  parallel_for(cfg.num_paths, default_thread_count(), [&](std::size_t p) {
    const auto noise = generate_noise(cfg.seed, p, cfg);
    std::mt19937_64 flips(1000003ull * p + 17);
    std::bernoulli_distribution up(alpha);
    double w = 0.0;
    double sign = up(flips) ? 1.0 : -1.0;
    for (const double dw : noise.increments) {
      const double next = w + dw;
      if ((w > 0.0) != (next > 0.0)) {
        sign = up(flips) ? 1.0 : -1.0;  // new excursion
      }
      w = next;
    }
    positive[p] = sign * std::abs(w) > 0.0 ? 1 : 0;
  });
  const double p_hat =
      static_cast<double>(std::count(positive.begin(), positive.end(), 1)) / cfg.num_paths;
  EXPECT_LE(std::abs(p_hat - alpha), 3.0 * binomial_se(alpha, cfg.num_paths));
}

TEST(Skew, LargeKConcentratesOnPositiveSide) {
  const SimulationConfig cfg{0.1, 1e-5, 4000, 32};
  const auto est = skew_limit_estimate(5.0, 500.0, cfg, default_thread_count());
  EXPECT_GT(est.estimate, 0.98);
}

TEST(Skew, SymmetricControlsGiveOneHalf) {
  const SimulationConfig cfg{0.1, 1e-4, 20000, 33};
  const auto flat = sign_probability(CoefficientPair::constant(0.0, 1.0), 0.0, cfg, 2);
  EXPECT_LE(std::abs(flat.estimate - 0.5), 3.0 * binomial_se(0.5, cfg.num_paths));
  const double a = 200.0;
  const double c = 1.0 / a;
  CoefficientPair both{[a, c](double x) {
                         return (x > -c && x < 0.0) ? a : (x > 0.0 && x < c) ? -a : 0.0;
                       },
                       [](double) { return 1.0; }, {-c, 0.0, c}, 1.0};
  const auto layered = sign_probability(both, 0.0, cfg, 2);
  EXPECT_LE(std::abs(layered.estimate - 0.5), 3.0 * binomial_se(0.5, cfg.num_paths));
}

TEST(Modulus, BoundArithmetic) {
  ModulusQuery q{1e-3, 0.5, -1.0, 1.0, 1.0, 1.0};
  EXPECT_NEAR(modulus_bound(q), 8192.0 / 3.0 * 1e-3 / 0.25, 1e-12);
  EXPECT_NEAR(modulus_bound(q), 10.92, 0.01);
  q.delta = 1e-5;
  EXPECT_NEAR(modulus_bound(q), 0.109, 1e-3);
}

TEST(Modulus, QueryValidation) {
  EXPECT_THROW((ModulusQuery{0.0, 0.5, -1.0, 1.0, 1.0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((ModulusQuery{2.0, 0.5, -1.0, 1.0, 1.0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((ModulusQuery{0.1, 3.0, -1.0, 1.0, 1.0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((ModulusQuery{0.1, 0.5, -1.0, 1.0, 0.0, 1.0}.validate()), ValidationError);
}

TEST(Modulus, TrivialEvents) {
  const ModulusQuery q{1e-2, 0.5, -1.0, 1.0, 1.0, 1.0};
  std::vector<GridPath> constant(5, GridPath::on_grid(1e-3, std::vector<double>(1001, 0.3)));
  EXPECT_EQ(modulus_event_frequency(constant, q).frequency, 0.0);

  ModulusQuery wide{1e-2, 1.9, -1.0, 1.0, 1.0, 1.0};
  std::vector<GridPath> small;
  for (int p = 0; p < 5; ++p) {
    std::vector<double> v(1001);
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = 0.5 * std::sin(0.01 * static_cast<double>(k) + p);
    }
    small.push_back(GridPath::on_grid(1e-3, v));
  }
  EXPECT_EQ(modulus_event_frequency(small, wide).frequency, 0.0);
}

TEST(Modulus, CoarseGridRejected) {
  const ModulusQuery q{1e-3, 0.5, -1.0, 1.0, 1.0, 1.0};
  std::vector<GridPath> coarse(1, GridPath::on_grid(1e-3, std::vector<double>(11, 0.0)));
  EXPECT_THROW(modulus_event_frequency(coarse, q), ValidationError);
  const SimulationConfig cfg{1.0, 1e-3, 1, 0};
  EXPECT_THROW(modulus_study(CoefficientPair::constant(0.0, 1.0), 0.0, cfg, q), ValidationError);
}

TEST(Modulus, WindowScanMatchesBruteForce) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double step = 1e-3;
  int events = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> v(400);
    const double vol = 0.02 + 0.2 * u(rng);
    v[0] = 2.0 * u(rng) - 1.0;
    for (std::size_t k = 1; k < v.size(); ++k) {
      v[k] = v[k - 1] + vol * n01(rng);
    }
    const double alpha = -1.0 + 0.5 * u(rng);
    const double beta = alpha + 0.5 + 1.5 * u(rng);
    const double distance = (beta - alpha) * (0.05 + 0.5 * u(rng));
    const double delta = step * (4.0 + std::floor(40.0 * u(rng))) + 0.3 * step * u(rng);
    const ModulusQuery q{delta, distance, alpha, beta, 1.0, 1.0};
    const bool expected = brute_force_modulus(v, step, q);
    ASSERT_EQ(modulus_event_occurs(v, step, q), expected) << trial;
    events += expected ? 1 : 0;
  }
  // Both outcomes exercised.
  EXPECT_GT(events, 100);
  EXPECT_LT(events, 1900);
}

TEST(Modulus, FrequencyRespectsBound) {
  // Shortened horizon keeps the run small; the bound is evaluated on the
  // same horizon.
  for (const double sigma : {1.0, 0.5}) {
    const SimulationConfig cfg{0.1, 2.5e-5, 2000, 40};
    const ModulusQuery q{1e-4, 0.5, -1.0, 1.0, sigma, cfg.horizon};
    const auto est = modulus_study(CoefficientPair::constant(0.0, sigma), 0.0, cfg, q, 2);
    EXPECT_LE(est.frequency, est.bound + 3.0 * est.se);
    EXPECT_LE(est.bound, 1.0);
    EXPECT_EQ(est.paths, cfg.num_paths);
  }
}

TEST(Modulus, StudyMatchesMaterializedPaths) {
  const SimulationConfig cfg{0.05, 1e-4, 300, 41};
  const ModulusQuery q{2e-3, 0.15, -1.0, 1.0, 1.0, cfg.horizon};
  const auto coeffs = CoefficientPair::constant(0.0, 1.0);
  std::vector<GridPath> paths;
  for (std::size_t p = 0; p < cfg.num_paths; ++p) {
    paths.push_back(simulate_sde(coeffs, 0.0, cfg, generate_noise(cfg.seed, p, cfg)));
  }
  const auto a = modulus_event_frequency(paths, q);
  const auto b = modulus_study(coeffs, 0.0, cfg, q, 3);
  EXPECT_EQ(a.frequency, b.frequency);
  EXPECT_GT(a.frequency, 0.0);
  EXPECT_LT(a.frequency, 1.0);
}
