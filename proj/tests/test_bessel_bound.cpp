#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fvqsd/bessel_bound.hpp"
#include "support/oracles.hpp"

namespace {

using namespace fvqsd;

TEST(Bessel, FullDeltaIsCertain) {
  const std::vector<double> times{0.0, 0.3, 1.0}, deltas{0.5, 1.0};
  const auto tab = simulate_reflected_bessel({2, 1.0, 1.0}, times, deltas, 1e-3, 500, 4);
  for (std::size_t t = 0; t < times.size(); ++t) EXPECT_EQ(tab.p(t, 1), 1.0);
  EXPECT_EQ(tab.p(0, 0), 1.0);
}

TEST(Bessel, DriftlessOneDimensionalIsReflectedBrownianMotion) {
  const std::vector<double> times{1.0}, deltas{0.1, 0.3, 0.5, 0.7, 0.9};
  const auto tab = simulate_reflected_bessel({1, 0.0, 1.0}, times, deltas, 1e-3, 40000, 5);
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    const double exact = 1.0 - oracle::reflected_bm_cdf(1.0 - deltas[d], 1.0, 1.0, 1.0);
    EXPECT_LE(std::abs(tab.p(0, d) - exact), 3.0 * tab.se(0, d)) << deltas[d];
  }
}

// With strong drift towards r the law of r - eta is close to its stationary
// profile proportional to exp(-2 B y), so P(eta >= r - delta) -> 1 - exp(-2 B delta).
TEST(Bessel, StrongDriftConcentratesNearRadius) {
  const std::vector<double> times{1.0}, deltas{0.1};
  const auto tab = simulate_reflected_bessel({1, 10.0, 1.0}, times, deltas, 1e-4, 20000, 6);
  const double stationary = (1.0 - std::exp(-2.0)) / (1.0 - std::exp(-20.0));
  EXPECT_NEAR(tab.p(0, 0), stationary, 3.0 * tab.se(0, 0));
}

TEST(BesselProperties, MonotoneInDeltaAndTime) {
  const std::vector<double> times{0.05, 0.2, 0.5, 1.0}, deltas{0.02, 0.05, 0.1, 0.3};
  for (std::size_t dim : {1u, 2u, 3u}) {
    const auto tab = simulate_reflected_bessel({dim, 0.5, 1.0}, times, deltas, 1e-3, 4000, 7);
    for (std::size_t t = 0; t < times.size(); ++t)
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        EXPECT_GE(tab.p(t, d), 0.0);
        EXPECT_LE(tab.p(t, d), 1.0);
        if (d > 0) EXPECT_GE(tab.p(t, d), tab.p(t, d - 1));
      }
  }
  const auto bm = simulate_reflected_bessel({1, 0.0, 1.0}, times, deltas, 1e-3, 4000, 8);
  for (std::size_t d = 0; d < deltas.size(); ++d)
    for (std::size_t t = 1; t < times.size(); ++t)
      EXPECT_LE(bm.p(t, d), bm.p(t - 1, d) + 3.0 * (bm.se(t, d) + bm.se(t - 1, d)));
}

TEST(Bessel, Preconditions) {
  const std::vector<double> times{1.0}, deltas{0.1};
  EXPECT_THROW(simulate_reflected_bessel({1, 0.0, 1.0}, times, deltas, 0.02, 10, 1), std::invalid_argument);
  EXPECT_THROW(simulate_reflected_bessel({1, -1.0, 1.0}, times, deltas, 1e-3, 10, 1), std::invalid_argument);
  EXPECT_THROW(simulate_reflected_bessel({1, 0.0, 1.0}, times, std::vector<double>{1.5}, 1e-3, 10, 1),
               std::invalid_argument);
}

TEST(Bessel, ThreadCountDoesNotChangeTable) {
  const std::vector<double> times{0.5}, deltas{0.1, 0.2};
  const auto a = simulate_reflected_bessel({2, 1.0, 1.0}, times, deltas, 1e-3, 999, 9, 1);
  const auto b = simulate_reflected_bessel({2, 1.0, 1.0}, times, deltas, 1e-3, 999, 9, 3);
  EXPECT_EQ(a.probability, b.probability);
}

TrajectorySeries single_snapshot(std::vector<double> xs, double t) {
  TrajectorySeries s;
  s.count = xs.size();
  s.dimension = 1;
  s.dt = 0.01;
  s.times = {0.0, t};
  s.jump_counts = {0, 0};
  s.positions = xs;
  s.positions.insert(s.positions.end(), xs.begin(), xs.end());
  return s;
}

TEST(Domination, Synthetic) {
  const Domain I = Domain::interval(-1, 1);
  const std::vector<double> times{1.0}, deltas{0.1};
  const auto tab = simulate_reflected_bessel({1, 0.0, 1.0}, times, deltas, 1e-3, 4000, 10);
  EXPECT_TRUE(domination_check(tab, single_snapshot({0.0, 0.1, -0.2, 0.3}, 1.0), I, 1.0, 0.1).pass);
  const auto bad = domination_check(tab, single_snapshot(std::vector<double>(400, 0.95), 1.0), I, 1.0, 0.1);
  EXPECT_NEAR(bad.boundary_mass, 1.0, 1e-12);
  EXPECT_FALSE(bad.pass);
  EXPECT_THROW(domination_check(tab, single_snapshot({0.0, 0.1}, 0.5), I, 0.5, 0.1), std::invalid_argument);
}

TEST(Domination, BrownianParticles) {
  const Domain I = Domain::interval(-1, 1);
  Ensemble e = init_ensemble(2000, I, InitialLaw::uniform(), 13);
  const auto res = run(e, DriftSpec::zero(), I, 1.0, 1e-3, 0.5);
  const std::vector<double> times{1.0}, deltas{0.05};
  const auto tab = simulate_reflected_bessel(BesselParams::for_domain(I, 0.0), times, deltas, 1e-3, 10000, 14);
  EXPECT_TRUE(domination_check(tab, res.series, I, 1.0, 0.05).pass);
}

}  // namespace
