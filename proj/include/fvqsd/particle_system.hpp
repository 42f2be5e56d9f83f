#pragma once

// Time-discretised Fleming-Viot particle system with empirical-measure drift.
//
// Each step: freeze the drift at the start-of-step empirical measure, propose an
// Euler-Maruyama move per particle from its own counter-based stream, then resolve
// boundary crossings sequentially. Crossers are processed in a uniformly random
// order drawn from the respawn stream; each picks a target uniformly among the
// other N-1 indices and lands on the target's resolved position, or on the
// target's start-of-step position if the target is itself a crosser that has not
// been resolved yet.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fvqsd/drift.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/geometry.hpp"
#include "fvqsd/initial_law.hpp"
#include "fvqsd/random.hpp"

namespace fvqsd {

// Stream id reserved for respawn choices; particle i uses stream i.
inline constexpr std::uint64_t kRespawnStream = 0xFFFF'FFFF'FFFF'FFFFull;

struct Ensemble {
  std::size_t count = 0;
  std::size_t dimension = 0;
  std::vector<double> positions;  // row-major count x dimension
  std::uint64_t jump_count = 0;
  double time = 0.0;
  std::vector<std::uint64_t> deaths;  // per-particle death counters
  std::vector<RandomStream> streams;
  RandomStream respawn;

  std::span<const double> position(std::size_t i) const { return {positions.data() + i * dimension, dimension}; }
  std::span<double> position(std::size_t i) { return {positions.data() + i * dimension, dimension}; }
  double jump_process() const { return static_cast<double>(jump_count) / static_cast<double>(count); }
};

struct JumpEvent {
  double time = 0.0;  // end of the step in which the crossing was resolved
  std::size_t dying = 0;
  std::uint64_t death_ordinal = 0;  // k for the k-th death of `dying`, starting at 1
  std::size_t target = 0;
  Point landing;
  bool target_pending = false;  // target had crossed too and was still unresolved

  friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

struct EventLog {
  std::vector<JumpEvent> events;
  friend bool operator==(const EventLog&, const EventLog&) = default;
};

struct TrajectorySeries {
  std::size_t count = 0;
  std::size_t dimension = 0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<std::uint64_t> jump_counts;
  std::vector<double> positions;  // snapshots x count x dimension

  std::size_t size() const { return times.size(); }
  double jump_process(std::size_t k) const {
    return static_cast<double>(jump_counts[k]) / static_cast<double>(count);
  }
  std::span<const double> snapshot(std::size_t k) const {
    return {positions.data() + k * count * dimension, count * dimension};
  }
  std::span<const double> position(std::size_t k, std::size_t i) const {
    return {positions.data() + (k * count + i) * dimension, dimension};
  }

  void record(const Ensemble& e, double t) {
    times.push_back(t);
    jump_counts.push_back(e.jump_count);
    positions.insert(positions.end(), e.positions.begin(), e.positions.end());
  }

  friend bool operator==(const TrajectorySeries&, const TrajectorySeries&) = default;
};

struct StepOptions {
  bool bridge_correction = false;
  int threads = 1;
};

namespace detail {

inline Ensemble empty_ensemble(std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("a Fleming-Viot system needs N >= 2 particles, got " + std::to_string(n));
  Ensemble e;
  e.count = n;
  e.dimension = dim;
  e.positions.resize(n * dim);
  e.deaths.assign(n, 0);
  e.streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) e.streams.emplace_back(seed, i);
  e.respawn = RandomStream(seed, kRespawnStream);
  return e;
}

}  // namespace detail

inline Ensemble init_ensemble(std::size_t n, const Domain& domain, std::span<const double> positions,
                              std::uint64_t seed) {
  const std::size_t dim = domain.dimension();
  Ensemble e = detail::empty_ensemble(n, dim, seed);
  if (positions.size() != n * dim)
    throw std::invalid_argument("expected " + std::to_string(n * dim) + " coordinates, got " +
                                std::to_string(positions.size()));
  for (std::size_t i = 0; i < n; ++i) {
    if (!domain.contains(positions.subspan(i * dim, dim)))
      throw std::invalid_argument("initial position of particle " + std::to_string(i) + " lies outside the domain");
  }
  e.positions.assign(positions.begin(), positions.end());
  return e;
}

// Samples X_0^i ~ law independently; particle i draws from its own stream.
inline Ensemble init_ensemble(std::size_t n, const Domain& domain, const InitialLaw& law, std::uint64_t seed) {
  const std::size_t dim = domain.dimension();
  Ensemble e = detail::empty_ensemble(n, dim, seed);
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = law.sample(domain, e.streams[i]);
    std::copy(x.begin(), x.end(), e.positions.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return e;
}

// Applies the jump rule to a set of proposed moves. `crossed[i]` marks particles
// whose proposal left the domain (or was killed by the bridge test); their
// proposals are ignored. Advances the clock by dt.
inline std::vector<JumpEvent> resolve_step(Ensemble& e, std::span<const double> proposals,
                                           const std::vector<bool>& crossed, double dt) {
  const std::size_t n = e.count, dim = e.dimension;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i)
    if (crossed[i]) order.push_back(i);
  if (2 * order.size() > n)
    throw NumericalError("step too coarse: " + std::to_string(order.size()) + " of " + std::to_string(n) +
                         " particles crossed the boundary in one step");

  const double t_end = e.time + dt;
  std::vector<double> next(proposals.begin(), proposals.end());
  std::vector<bool> pending = crossed;
  for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[e.respawn.below(k)]);

  std::vector<JumpEvent> events;
  events.reserve(order.size());
  for (std::size_t i : order) {
    std::size_t j = static_cast<std::size_t>(e.respawn.below(n - 1));
    if (j >= i) ++j;
    const double* src = pending[j] ? e.positions.data() + j * dim : next.data() + j * dim;
    std::copy(src, src + dim, next.begin() + static_cast<std::ptrdiff_t>(i * dim));
    pending[i] = false;
    ++e.jump_count;
    events.push_back({t_end, i, ++e.deaths[i], j, Point(src, src + dim), static_cast<bool>(pending[j])});
  }
  e.positions = std::move(next);
  e.time = t_end;
  return events;
}

// Euler-Maruyama proposal for every particle plus crossing flags.
inline void propose_moves(Ensemble& e, const DriftSpec& drift, const Domain& domain, double dt,
                          const StepOptions& opts, std::vector<double>& proposals, std::vector<bool>& crossed) {
  const std::size_t n = e.count, dim = e.dimension;
  const MeasureSummary summary = summarize(e.positions, dim, drift.needs_support());
  const double sqdt = std::sqrt(dt);
  proposals.resize(n * dim);
  std::vector<char> flags(n, 0);
  const long long n_signed = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(opts.threads > 0 ? opts.threads : 1) if (opts.threads != 1)
  for (long long ii = 0; ii < n_signed; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::span<const double> x = e.position(i);
    std::span<double> y(proposals.data() + i * dim, dim);
    evaluate_drift_into(drift, summary, x, y);
    RandomStream& rng = e.streams[i];
    for (std::size_t k = 0; k < dim; ++k) y[k] = x[k] + y[k] * dt + sqdt * rng.normal();
    bool out = domain.crossing_fraction(x, y).has_value();
    if (opts.bridge_correction) {
      const double u = rng.uniform();
      if (!out) {
        const double d1 = domain.boundary_distance(x), d2 = domain.boundary_distance(y);
        out = u < std::exp(-2.0 * d1 * d2 / dt);
      }
    }
    flags[i] = out ? 1 : 0;
  }
  crossed.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) crossed[i] = flags[i] != 0;
}

inline std::vector<JumpEvent> step(Ensemble& e, const DriftSpec& drift, const Domain& domain, double dt,
                                   const StepOptions& opts = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (domain.dimension() != e.dimension) throw std::invalid_argument("step: domain dimension mismatch");
  std::vector<double> proposals;
  std::vector<bool> crossed;
  propose_moves(e, drift, domain, dt, opts, proposals, crossed);
  return resolve_step(e, proposals, crossed, dt);
}

struct RunResult {
  TrajectorySeries series;
  EventLog log;
};

// Iterates `step` up to horizon T, recording a snapshot every `snapshot_every`
// (rounded to a whole number of steps), starting with the initial state.
inline RunResult run(Ensemble& e, const DriftSpec& drift, const Domain& domain, double horizon, double dt,
                     double snapshot_every, const StepOptions& opts = {}) {
  if (!(horizon > 0.0)) throw std::invalid_argument("run: horizon must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("run: dt must be positive");
  if (!(snapshot_every >= dt * (1.0 - 1e-9))) throw std::invalid_argument("run: snapshot_every must be >= dt");
  const auto steps = static_cast<std::uint64_t>(std::llround(horizon / dt));
  const auto stride = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(snapshot_every / dt)));
  const double t0 = e.time;

  RunResult out;
  out.series.count = e.count;
  out.series.dimension = e.dimension;
  out.series.dt = dt;
  out.series.record(e, t0);
  std::vector<double> proposals;
  std::vector<bool> crossed;
  for (std::uint64_t s = 1; s <= steps; ++s) {
    propose_moves(e, drift, domain, dt, opts, proposals, crossed);
    auto events = resolve_step(e, proposals, crossed, dt);
    const double t = t0 + static_cast<double>(s) * dt;
    e.time = t;
    for (auto& ev : events) {
      ev.time = t;
      out.log.events.push_back(std::move(ev));
    }
    if (s % stride == 0) out.series.record(e, t);
  }
  return out;
}

// Lifetimes of independent killed diffusions dX = b(mu, X) dt + dW with the drift
// frozen at a fixed measure summary (the McKean-Vlasov dynamics at a QSD).
// The hitting time is interpolated inside the step by the crossing fraction.
inline std::vector<double> absorbed_lifetimes(const Domain& domain, const DriftSpec& drift,
                                              const MeasureSummary& frozen, const InitialLaw& law, std::size_t paths,
                                              double dt, std::uint64_t seed, double max_time,
                                              const StepOptions& opts = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("absorbed_lifetimes: dt must be positive");
  const std::size_t dim = domain.dimension();
  const double sqdt = std::sqrt(dt);
  std::vector<double> lifetimes(paths, 0.0);
  std::vector<char> censored(paths, 0);
  const long long paths_signed = static_cast<long long>(paths);
#pragma omp parallel for schedule(dynamic, 16) num_threads(opts.threads > 0 ? opts.threads : 1) if (opts.threads != 1)
  for (long long pp = 0; pp < paths_signed; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    RandomStream rng(seed, p);
    Point x = law.sample(domain, rng);
    Point y(dim), b(dim);
    double t = 0.0;
    for (;;) {
      evaluate_drift_into(drift, frozen, x, b);
      for (std::size_t k = 0; k < dim; ++k) y[k] = x[k] + b[k] * dt + sqdt * rng.normal();
      if (auto s = domain.crossing_fraction(x, y)) {
        lifetimes[p] = t + *s * dt;
        break;
      }
      if (opts.bridge_correction) {
        const double d1 = domain.boundary_distance(x), d2 = domain.boundary_distance(y);
        if (rng.uniform() < std::exp(-2.0 * d1 * d2 / dt)) {
          lifetimes[p] = t + dt;
          break;
        }
      }
      t += dt;
      std::swap(x, y);
      if (t > max_time) {
        censored[p] = 1;
        break;
      }
    }
  }
  for (std::size_t p = 0; p < paths; ++p)
    if (censored[p]) throw NumericalError("absorbed_lifetimes: a path survived past max_time");
  return lifetimes;
}

}  // namespace fvqsd
