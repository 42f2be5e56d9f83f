#pragma once

// Dynamical historical process: the ancestral path of particle i at time t,
// obtained by walking the event log backwards and switching, at every death of
// the currently followed particle, to the particle it jumped onto.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fvqsd/particle_system.hpp"

namespace fvqsd {

struct PathPoint {
  double time = 0.0;
  std::size_t particle = 0;  // index followed at this time
  Point position;
};

struct Transfer {
  double time = 0.0;
  std::size_t descendant = 0;  // particle that died and landed
  std::size_t ancestor = 0;    // particle it jumped onto
  Point landing;
  Point ancestor_position;  // ancestor's position at the jump, read from the series
};

struct AncestralPath {
  std::vector<PathPoint> points;  // ascending in time
  std::vector<Transfer> transfers;  // ascending in time

  // Largest |landing - ancestor position| over all transfers.
  double max_transfer_gap() const {
    double gap = 0.0;
    for (const auto& tr : transfers) {
      double s = 0.0;
      for (std::size_t k = 0; k < tr.landing.size(); ++k)
        s += (tr.landing[k] - tr.ancestor_position[k]) * (tr.landing[k] - tr.ancestor_position[k]);
      gap = std::max(gap, std::sqrt(s));
    }
    return gap;
  }
};

namespace detail {

inline double time_tolerance(const TrajectorySeries& series) { return 1e-9 * std::max(series.dt, 1e-12); }

// Position of particle i at time t, interpolated linearly between snapshots.
inline Point interpolate_position(const TrajectorySeries& series, std::size_t i, double t) {
  const double tol = time_tolerance(series);
  const auto it = std::lower_bound(series.times.begin(), series.times.end(), t - tol);
  if (it == series.times.end()) throw std::invalid_argument("time lies beyond the last snapshot");
  const auto k = static_cast<std::size_t>(it - series.times.begin());
  const auto here = series.position(k, i);
  if (std::abs(series.times[k] - t) <= tol || k == 0) return {here.begin(), here.end()};
  const auto before = series.position(k - 1, i);
  const double w = (t - series.times[k - 1]) / (series.times[k] - series.times[k - 1]);
  Point out(series.dimension);
  for (std::size_t d = 0; d < series.dimension; ++d) out[d] = (1.0 - w) * before[d] + w * here[d];
  return out;
}

}  // namespace detail

// `t` must be one of the snapshot times of `series`.
inline AncestralPath reconstruct_dhp(const EventLog& log, const TrajectorySeries& series, std::size_t i, double t) {
  if (i >= series.count)
    throw std::invalid_argument("particle index " + std::to_string(i) + " out of range for N=" +
                                std::to_string(series.count));
  if (series.times.empty()) throw std::invalid_argument("empty trajectory series");
  const double tol = detail::time_tolerance(series);
  if (t > series.times.back() + tol) throw std::invalid_argument("t lies beyond the final snapshot");
  const auto t_it = std::lower_bound(series.times.begin(), series.times.end(), t - tol);
  if (t_it == series.times.end() || std::abs(*t_it - t) > tol)
    throw std::invalid_argument("reconstruct_dhp: t must coincide with a snapshot time");
  const auto last_snapshot = static_cast<std::size_t>(t_it - series.times.begin());

  // Backward walk. Segment k follows `who[k]` on [lower[k], upper) with the
  // jump time itself attributed to the descendant.
  std::vector<std::size_t> who{i};
  std::vector<double> lower;
  AncestralPath path;
  std::size_t cursor = static_cast<std::size_t>(
      std::upper_bound(log.events.begin(), log.events.end(), t + tol,
                       [](double v, const JumpEvent& ev) { return v < ev.time; }) -
      log.events.begin());
  std::size_t current = i;
  for (;;) {
    std::size_t e = cursor;
    while (e > 0 && log.events[e - 1].dying != current) --e;
    if (e == 0) break;
    const JumpEvent& ev = log.events[e - 1];
    Transfer tr;
    tr.time = ev.time;
    tr.descendant = current;
    tr.ancestor = ev.target;
    tr.landing = ev.landing;
    tr.ancestor_position = detail::interpolate_position(series, ev.target, ev.target_pending ? ev.time - series.dt : ev.time);
    path.transfers.push_back(std::move(tr));
    lower.push_back(ev.time);
    current = ev.target;
    who.push_back(current);
    cursor = e - 1;
  }
  lower.push_back(-std::numeric_limits<double>::infinity());
  std::reverse(path.transfers.begin(), path.transfers.end());

  // Forward over snapshots: the followed particle at s is the first segment
  // (from the descendant end) whose lower bound is <= s.
  for (std::size_t k = 0; k <= last_snapshot; ++k) {
    const double s = series.times[k];
    std::size_t seg = 0;
    while (s < lower[seg] - tol) ++seg;
    const auto x = series.position(k, who[seg]);
    path.points.push_back({s, who[seg], Point(x.begin(), x.end())});
  }
  return path;
}

}  // namespace fvqsd
