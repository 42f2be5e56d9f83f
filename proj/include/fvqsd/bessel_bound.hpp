#pragma once

// Drifted reflected Bessel comparison process on [0, r]:
//   d eta = dW + B dt + (d - 1) / (2 eta) dt - dL^{r - eta}     (d > 1)
//   d eta = dW + B dt + dL^{eta} - dL^{r - eta}                 (d = 1)
// started at eta_0 = r. Every particle satisfies d(X_t, dU) >= r - eta_t under the
// coupling, so P(d(X_t, dU) < delta) <= P(eta_t >= r - delta); the tail table
// holds Monte Carlo estimates of the right-hand side.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fvqsd/error.hpp"
#include "fvqsd/estimators.hpp"
#include "fvqsd/geometry.hpp"
#include "fvqsd/particle_system.hpp"
#include "fvqsd/random.hpp"

namespace fvqsd {

struct BesselParams {
  std::size_t dimension = 1;
  double drift_bound = 0.0;  // B
  double radius = 1.0;       // r, also the starting value

  static BesselParams for_domain(const Domain& domain, double drift_bound) {
    return {domain.dimension(), drift_bound, domain.interior_ball_radius()};
  }
};

struct TailTable {
  std::vector<double> times;
  std::vector<double> deltas;
  std::vector<double> probability;  // times x deltas, row-major
  std::vector<double> std_error;
  std::size_t paths = 0;
  std::uint64_t clamp_count = 0;

  double p(std::size_t ti, std::size_t di) const { return probability[ti * deltas.size() + di]; }
  double se(std::size_t ti, std::size_t di) const { return std_error[ti * deltas.size() + di]; }

  std::size_t time_index(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
    throw std::invalid_argument("tail table has no entry at t = " + std::to_string(t));
  }
  std::size_t delta_index(double delta) const {
    for (std::size_t k = 0; k < deltas.size(); ++k)
      if (std::abs(deltas[k] - delta) <= 1e-12 * std::max(1.0, delta)) return k;
    throw std::invalid_argument("tail table has no entry at delta = " + std::to_string(delta));
  }
};

inline constexpr double kSingularFloor = 1e-6;  // in units of r
inline constexpr double kMaxClampFraction = 0.01;

// Euler scheme with overshoot reflection at r (and at 0). Record times are
// rounded to whole steps.
inline TailTable simulate_reflected_bessel(const BesselParams& params, std::span<const double> times,
                                           std::span<const double> deltas, double dt, std::size_t paths,
                                           std::uint64_t seed, int threads = 1) {
  const double r = params.radius;
  if (!(r > 0.0)) throw std::invalid_argument("Bessel comparison needs r > 0");
  if (params.drift_bound < 0.0) throw std::invalid_argument("Bessel comparison needs B >= 0");
  if (params.dimension < 1) throw std::invalid_argument("Bessel comparison needs d >= 1");
  if (!(dt > 0.0) || dt > r * r / 100.0) throw std::invalid_argument("Bessel comparison needs 0 < dt <= r^2 / 100");
  if (paths == 0 || times.empty() || deltas.empty()) throw std::invalid_argument("empty Bessel tail request");
  for (double d : deltas)
    if (!(d > 0.0) || d > r) throw std::invalid_argument("tail deltas must lie in (0, r]");

  TailTable table;
  table.times.assign(times.begin(), times.end());
  table.deltas.assign(deltas.begin(), deltas.end());
  std::sort(table.times.begin(), table.times.end());
  std::sort(table.deltas.begin(), table.deltas.end());
  table.paths = paths;
  std::vector<std::uint64_t> record_step(table.times.size());
  for (std::size_t k = 0; k < table.times.size(); ++k) {
    if (table.times[k] < 0.0) throw std::invalid_argument("tail times must be nonnegative");
    record_step[k] = static_cast<std::uint64_t>(std::llround(table.times[k] / dt));
  }
  const std::uint64_t total_steps = record_step.back();
  const std::size_t cells = table.times.size() * table.deltas.size();
  const double floor = kSingularFloor * r;
  const double bessel = 0.5 * (static_cast<double>(params.dimension) - 1.0);
  const double sqdt = std::sqrt(dt);

  std::vector<std::uint32_t> hits(cells, 0);
  std::uint64_t clamps = 0;
  const long long paths_signed = static_cast<long long>(paths);
#pragma omp parallel num_threads(threads > 0 ? threads : 1) if (threads != 1)
  {
    std::vector<std::uint32_t> local(cells, 0);
    std::uint64_t local_clamps = 0;
#pragma omp for schedule(static)
    for (long long pp = 0; pp < paths_signed; ++pp) {
      RandomStream rng(seed, static_cast<std::uint64_t>(pp));
      double eta = r;
      std::size_t next_record = 0;
      for (std::uint64_t s = 0;; ++s) {
        while (next_record < record_step.size() && record_step[next_record] == s) {
          for (std::size_t d = 0; d < table.deltas.size(); ++d)
            if (eta >= r - table.deltas[d]) ++local[next_record * table.deltas.size() + d];
          ++next_record;
        }
        if (s == total_steps) break;
        double drift = params.drift_bound;
        if (params.dimension > 1) {
          if (eta < floor) ++local_clamps;
          drift += bessel / std::max(eta, floor);
        }
        eta += drift * dt + sqdt * rng.normal();
        // Fold back into [0, r]; repeated for overshoots larger than r.
        while (eta > r || eta < 0.0) eta = eta > r ? 2.0 * r - eta : -eta;
      }
    }
#pragma omp critical
    {
      for (std::size_t c = 0; c < cells; ++c) hits[c] += local[c];
      clamps += local_clamps;
    }
  }
  table.clamp_count = clamps;
  if (static_cast<double>(clamps) > kMaxClampFraction * static_cast<double>(paths) * static_cast<double>(total_steps))
    throw NumericalError("dt too coarse for singular drift: " + std::to_string(clamps) + " clamped steps");

  table.probability.resize(cells);
  table.std_error.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const double p = static_cast<double>(hits[c]) / static_cast<double>(paths);
    table.probability[c] = p;
    table.std_error[c] = std::sqrt(p * (1.0 - p) / static_cast<double>(paths));
  }
  return table;
}

struct DominationReport {
  double time = 0.0;
  double delta = 0.0;
  double boundary_mass = 0.0;
  double tail = 0.0;
  double bound = 0.0;  // tail + 3 (MC standard error + binomial slack)
  bool pass = false;
};

// Compares the particle boundary mass at time t with the Bessel tail.
inline DominationReport domination_check(const TailTable& tail, const TrajectorySeries& series, const Domain& domain,
                                         double t, double delta) {
  if (!(t > 0.0)) throw std::invalid_argument("domination_check: t must be positive");
  const double tol = 1e-9 * std::max(series.dt, 1e-12);
  std::size_t k = series.size();
  for (std::size_t j = 0; j < series.size(); ++j)
    if (std::abs(series.times[j] - t) <= tol) k = j;
  if (k == series.size()) throw std::invalid_argument("domination_check: no snapshot at t = " + std::to_string(t));
  const std::size_t ti = tail.time_index(t), di = tail.delta_index(delta);

  DominationReport rep;
  rep.time = t;
  rep.delta = delta;
  rep.boundary_mass = boundary_mass(MeasureSnapshot::empirical(series.snapshot(k), series.dimension), domain, delta);
  rep.tail = tail.p(ti, di);
  const double binomial = std::sqrt(rep.tail * (1.0 - rep.tail) / static_cast<double>(series.count));
  rep.bound = rep.tail + 3.0 * (tail.se(ti, di) + binomial);
  rep.pass = rep.boundary_mass <= rep.bound;
  return rep;
}

}  // namespace fvqsd
