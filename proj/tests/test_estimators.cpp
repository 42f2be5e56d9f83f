#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fvqsd/estimators.hpp"
#include "fvqsd/random.hpp"
#include "support/oracles.hpp"

namespace {

using namespace fvqsd;

MeasureSnapshot points(std::vector<double> xs) { return MeasureSnapshot::empirical(xs, 1); }

TEST(Wasserstein1, Examples) {
  const auto mu = points({0.1, -0.3, 0.7});
  EXPECT_EQ(wasserstein1(mu, mu), 0.0);
  EXPECT_NEAR(wasserstein1(points({0.2}), points({0.5})), 0.3, 1e-15);
}

TEST(Wasserstein1, MatchesExhaustiveAssignment) {
  RandomStream rng(31, 0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(5), b(5);
    for (double& x : a) x = 2.0 * rng.uniform() - 1.0;
    for (double& x : b) x = 2.0 * rng.uniform() - 1.0;
    const double oracle = oracle::assignment_cost(a, b, [](double x, double y) { return std::abs(x - y); });
    EXPECT_NEAR(wasserstein1(points(a), points(b)), oracle, 1e-13);
  }
}

TEST(Wasserstein1, HistogramAgainstPoint) {
  // Uniform on (0,1) against a point at 0: mean distance 1/2.
  const auto h = MeasureSnapshot::histogram(HistogramSpec::uniform(0, 1, 4), {0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(wasserstein1(h, points({0.0})), 0.5, 1e-15);
}

TEST(Wasserstein1, Errors) {
  EXPECT_THROW(wasserstein1(MeasureSnapshot::weighted({0.0, 1.0}, {0.5, 0.4}), points({0.0})), std::invalid_argument);
  EXPECT_THROW(wasserstein1(MeasureSnapshot::empirical(std::vector<double>{0, 0}, 2), points({0.0})),
               std::invalid_argument);
}

TEST(Wasserstein1Properties, MetricAxioms) {
  RandomStream rng(32, 0);
  auto random_measure = [&] {
    const std::size_t n = 1 + rng.below(7);
    std::vector<double> xs(n), w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = 2.0 * rng.uniform() - 1.0;
      total += (w[i] = rng.uniform());
    }
    for (double& v : w) v /= total;
    // Exact unit mass after normalisation rounding.
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) s += w[i];
    w.back() = 1.0 - s;
    return MeasureSnapshot::weighted(xs, w);
  };
  for (int rep = 0; rep < 500; ++rep) {
    const auto a = random_measure(), b = random_measure(), c = random_measure();
    const double ab = wasserstein1(a, b), ba = wasserstein1(b, a);
    EXPECT_NEAR(ab, ba, 1e-14);
    EXPECT_LE(wasserstein1(a, c), ab + wasserstein1(b, c) + 1e-14);
    EXPECT_GE(ab, 0.0);
  }
  // Zero only for equal histograms.
  const auto spec = HistogramSpec::uniform(-1, 1, 4);
  const auto h1 = MeasureSnapshot::histogram(spec, {0.25, 0.25, 0.25, 0.25});
  const auto h2 = MeasureSnapshot::histogram(spec, {0.25, 0.25, 0.5, 0.0});
  EXPECT_EQ(wasserstein1(h1, h1), 0.0);
  EXPECT_GT(wasserstein1(h1, h2), 0.0);
}

TEST(Wasserstein1Properties, DominatesTruncatedMetric) {
  RandomStream rng(33, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.below(5);
    std::vector<double> a(n), b(n);
    for (double& x : a) x = 4.0 * rng.uniform() - 2.0;
    for (double& x : b) x = 4.0 * rng.uniform() - 2.0;
    const double plain = oracle::assignment_cost(a, b, [](double x, double y) { return std::abs(x - y); });
    const double truncated =
        oracle::assignment_cost(a, b, [](double x, double y) { return std::min(std::abs(x - y), 1.0); });
    const double w = wasserstein1(points(a), points(b));
    EXPECT_NEAR(w, plain, 1e-12);
    EXPECT_GE(w + 1e-12, truncated);
  }
}

TEST(TvHistogram, Examples) {
  const auto spec = HistogramSpec::uniform(-1, 1, 4);
  const auto mu = MeasureSnapshot::histogram(spec, {0.5, 0.5, 0.0, 0.0});
  const auto nu = MeasureSnapshot::histogram(spec, {0.0, 0.0, 0.25, 0.75});
  EXPECT_EQ(tv_histogram(mu, mu, spec), 0.0);
  EXPECT_DOUBLE_EQ(tv_histogram(mu, nu, spec), 1.0);
  EXPECT_THROW(tv_histogram(mu, nu, HistogramSpec::uniform(-1, 1, 5)), std::invalid_argument);
}

TEST(TvHistogram, RestrictedGaussianSample) {
  RandomStream rng(34, 0);
  std::vector<double> xs;
  while (xs.size() < 10000) {
    const double z = rng.normal();
    if (z > -1.0 && z < 1.0) xs.push_back(z);
  }
  const auto spec = HistogramSpec::uniform(-1, 1, 50);
  const auto& e = spec.edges[0];
  std::vector<double> exact;
  const double total = oracle::normal_cdf(1.0) - oracle::normal_cdf(-1.0);
  for (std::size_t k = 0; k + 1 < e.size(); ++k)
    exact.push_back((oracle::normal_cdf(e[k + 1]) - oracle::normal_cdf(e[k])) / total);
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < exact.size(); ++k) s += exact[k];
  exact.back() = 1.0 - s;
  EXPECT_LE(tv_histogram(points(xs), MeasureSnapshot::histogram(spec, exact), spec), 0.05);
}

TEST(TvHistogramProperties, RangeAndCoarsening) {
  RandomStream rng(35, 0);
  const auto fine = HistogramSpec::uniform(-1, 1, 32);
  const auto coarse = HistogramSpec::uniform(-1, 1, 8);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(20), b(20);
    for (double& x : a) x = 2.0 * rng.uniform() - 1.0;
    for (double& x : b) x = std::tanh(2.0 * rng.normal());
    const double tf = tv_histogram(points(a), points(b), fine);
    const double tc = tv_histogram(points(a), points(b), coarse);
    EXPECT_GE(tc, 0.0);
    EXPECT_LE(tf, 1.0);
    EXPECT_LE(tc, tf + 1e-14);
  }
}

TrajectorySeries line_series(double slope, double noise, std::uint64_t seed) {
  TrajectorySeries s;
  s.count = 100000;
  s.dimension = 1;
  s.dt = 0.1;
  RandomStream rng(seed, 0);
  for (int k = 0; k <= 40; ++k) {
    const double t = 0.1 * k;
    s.times.push_back(t);
    const double j = slope * t + noise * (2.0 * rng.uniform() - 1.0);
    s.jump_counts.push_back(static_cast<std::uint64_t>(std::llround(std::max(0.0, j) * 100000.0)));
    s.positions.insert(s.positions.end(), s.count, 0.0);
  }
  return s;
}

TEST(KillingRate, SyntheticLines) {
  EXPECT_NEAR(killing_rate(line_series(2.0, 0.0, 1), 0.5, 4.0), 2.0, 1e-12);
  EXPECT_NEAR(killing_rate(line_series(1.5, 0.01, 2), 0.5, 4.0), 1.5, 0.02);
  EXPECT_THROW(killing_rate(line_series(1.0, 0.0, 1), 1.0, 1.15), std::invalid_argument);
}

TEST(KillingRate, InvariantUnderConstantShift) {
  auto s = line_series(1.3, 0.01, 3);
  const double base = killing_rate(s, 1.0, 3.0);
  for (auto& j : s.jump_counts) j += 12345;
  EXPECT_NEAR(killing_rate(s, 1.0, 3.0), base, 1e-12);
}

TEST(KillingRate, BrownianParticlesMatchEigenvalue) {
  const Domain I = Domain::interval(-1, 1);
  Ensemble e = init_ensemble(1000, I, InitialLaw::uniform(), 41);
  const auto res = run(e, DriftSpec::zero(), I, 3.0, 1e-3, 0.05);
  const double rate = killing_rate(res.series, 1.0, 3.0);
  const double exact = std::numbers::pi * std::numbers::pi / 8.0;
  EXPECT_NEAR(rate, exact, 0.1 * exact);
}

TEST(StationaryQsd, ConstantSeriesReturnsItsHistogram) {
  TrajectorySeries s;
  s.count = 4;
  s.dimension = 1;
  s.dt = 0.01;
  const std::vector<double> snap{-0.9, -0.2, 0.1, 0.6};
  for (int k = 0; k <= 100; ++k) {
    s.times.push_back(0.01 * k);
    s.jump_counts.push_back(0);
    s.positions.insert(s.positions.end(), snap.begin(), snap.end());
  }
  const auto spec = HistogramSpec::uniform(-1, 1, 4);
  const auto est = stationary_qsd_estimate(s, 0.2, 0.05, spec);
  EXPECT_EQ(est.masses, (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_NEAR(est.total_mass(), 1.0, 1e-15);
  EXPECT_THROW(stationary_qsd_estimate(s, 0.9, 0.05, spec), std::invalid_argument);
}

TEST(BoundaryMass, Examples) {
  const Domain I = Domain::interval(-1, 1);
  EXPECT_EQ(boundary_mass(points({0.0}), I, 0.5), 0.0);
  EXPECT_EQ(boundary_mass(points({0.99}), I, 0.02), 1.0);
  const Domain B = Domain::ball({0, 0}, 1);
  EXPECT_EQ(boundary_mass(MeasureSnapshot::empirical(std::vector<double>{0.0, 0.97, 0.0, 0.0}, 2), B, 0.05), 0.5);
}

TEST(BoundaryMass, HistogramOverlap) {
  const Domain I = Domain::interval(-1, 1);
  const auto h = MeasureSnapshot::histogram(HistogramSpec::uniform(-1, 1, 2), {0.5, 0.5});
  EXPECT_NEAR(boundary_mass(h, I, 0.1), 0.1, 1e-15);
}

TEST(BoundaryMass, StationaryBrownianSnapshot) {
  // Zero-drift particles started from the exact QSD stay at the QSD.
  const Domain I = Domain::interval(-1, 1);
  Ensemble e = init_ensemble(2000, I, InitialLaw::cosine(), 12);
  const auto res = run(e, DriftSpec::zero(), I, 0.5, 1e-3, 0.5);
  const double mass = boundary_mass(MeasureSnapshot::empirical(res.series.snapshot(1), 1), I, 0.05);
  const double exact = 1.0 - std::sin(0.5 * std::numbers::pi * 0.95);
  EXPECT_LE(mass, exact + 3.0 * std::sqrt(exact * (1 - exact) / 2000.0));
}

TEST(ExpKs, Quantiles) {
  const std::size_t n = 200;
  std::vector<double> q;
  for (std::size_t i = 1; i <= n; ++i) q.push_back(-std::log(1.0 - static_cast<double>(i) / (n + 1.0)) / 2.0);
  EXPECT_LE(exp_ks_test(q, 2.0), 1.0 / (n + 1.0) + 1e-12);
}

TEST(ExpKs, PseudoSamples) {
  RandomStream rng(36, 0);
  std::vector<double> xs(10000);
  for (double& x : xs) x = -std::log(rng.uniform());
  const double d = exp_ks_test(xs, 1.0);
  EXPECT_LE(d, 1.36 / 100.0 * 1.5);
  EXPECT_GT(ks_p_value(d, xs.size()), 0.01);
}

TEST(ExpKs, PValueMatchesCriticalValues) {
  // Large-sample critical values: 1.36/sqrt(n) at 5%, 1.63/sqrt(n) at 1%.
  EXPECT_NEAR(ks_p_value(1.358 / std::sqrt(1e6), 1000000), 0.05, 1e-3);
  EXPECT_NEAR(ks_p_value(1.628 / std::sqrt(1e6), 1000000), 0.01, 5e-4);
  EXPECT_EQ(ks_p_value(0.0, 100), 1.0);
}

TEST(ExpKs, Errors) {
  EXPECT_THROW(exp_ks_test({1.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(exp_ks_test({1.0}, -1.0), std::invalid_argument);
  EXPECT_THROW(exp_ks_test({}, 1.0), std::invalid_argument);
}

}  // namespace
