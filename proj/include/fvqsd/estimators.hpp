#pragma once

// Observables of particle runs: empirical measures and histograms, the 1D
// Wasserstein-1 distance, total variation on histograms, killing rates,
// time-averaged QSD estimates, boundary mass and a KS test against Exp(lambda).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fvqsd/geometry.hpp"
#include "fvqsd/particle_system.hpp"

namespace fvqsd {

// Tensor-product bins: one ascending edge vector per axis.
struct HistogramSpec {
  std::vector<std::vector<double>> edges;

  static HistogramSpec uniform(double a, double b, std::size_t bins) {
    if (bins == 0 || !(a < b)) throw std::invalid_argument("histogram needs a < b and at least one bin");
    std::vector<double> e(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) e[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(bins);
    e.back() = b;
    return {{std::move(e)}};
  }

  // `bins` per axis over the bounding box of the domain.
  static HistogramSpec covering(const Domain& domain, std::size_t bins) {
    HistogramSpec spec;
    for (std::size_t k = 0; k < domain.dimension(); ++k) {
      const bool ball = domain.kind() == DomainKind::ball;
      const double lo = ball ? domain.center()[k] - domain.radius() : domain.lower()[k];
      const double hi = ball ? domain.center()[k] + domain.radius() : domain.upper()[k];
      spec.edges.push_back(uniform(lo, hi, bins).edges[0]);
    }
    return spec;
  }

  std::size_t dimension() const { return edges.size(); }
  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& e : edges) n *= e.size() - 1;
    return n;
  }

  // Flat bin index of x; points on the outer edges fall in the boundary bins.
  std::size_t locate(std::span<const double> x) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto& e = edges[k];
      const std::size_t nb = e.size() - 1;
      if (x[k] < e.front() || x[k] > e.back()) throw std::invalid_argument("point outside the histogram range");
      auto b = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x[k]) - e.begin());
      b = std::min(nb, std::max<std::size_t>(b, 1)) - 1;
      flat = flat * nb + b;
    }
    return flat;
  }

  friend bool operator==(const HistogramSpec&, const HistogramSpec&) = default;
};

// A probability measure, either as weighted points or as a histogram.
struct MeasureSnapshot {
  std::size_t dimension = 1;
  // Weighted-point form.
  std::vector<double> points;  // row-major
  std::vector<double> weights;
  // Histogram form (used when `bins` is non-empty).
  HistogramSpec bins;
  std::vector<double> masses;

  bool is_histogram() const { return !bins.edges.empty(); }

  static MeasureSnapshot empirical(std::span<const double> positions, std::size_t dimension) {
    if (positions.empty() || positions.size() % dimension != 0)
      throw std::invalid_argument("empirical measure needs a nonempty N x d position array");
    MeasureSnapshot m;
    m.dimension = dimension;
    m.points.assign(positions.begin(), positions.end());
    const std::size_t n = positions.size() / dimension;
    m.weights.assign(n, 1.0 / static_cast<double>(n));
    return m;
  }

  static MeasureSnapshot weighted(std::vector<double> points, std::vector<double> weights, std::size_t dimension = 1) {
    MeasureSnapshot m;
    m.dimension = dimension;
    m.points = std::move(points);
    m.weights = std::move(weights);
    return m;
  }

  static MeasureSnapshot histogram(HistogramSpec spec, std::vector<double> masses) {
    if (masses.size() != spec.size()) throw std::invalid_argument("histogram mass count does not match bins");
    MeasureSnapshot m;
    m.dimension = spec.dimension();
    m.bins = std::move(spec);
    m.masses = std::move(masses);
    return m;
  }

  double total_mass() const {
    const auto& w = is_histogram() ? masses : weights;
    return std::accumulate(w.begin(), w.end(), 0.0);
  }
};

inline constexpr double kMassTolerance = 1e-12;

namespace detail {

inline void require_probability(const MeasureSnapshot& m, const char* who) {
  const double mass = m.total_mass();
  if (std::abs(mass - 1.0) > kMassTolerance)
    throw std::invalid_argument(std::string(who) + ": measure has mass " + std::to_string(mass) + ", expected 1");
}

// Piecewise-linear CDF of a 1D measure: point masses give jumps, histogram
// bins spread their mass uniformly.
class Cdf1D {
 public:
  explicit Cdf1D(const MeasureSnapshot& m) {
    if (m.is_histogram()) {
      edges_ = m.bins.edges[0];
      cum_.assign(edges_.size(), 0.0);
      for (std::size_t k = 0; k + 1 < edges_.size(); ++k) cum_[k + 1] = cum_[k] + m.masses[k];
    } else {
      std::vector<std::pair<double, double>> pw(m.weights.size());
      for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = {m.points[i], m.weights[i]};
      std::sort(pw.begin(), pw.end());
      double c = 0.0;
      for (const auto& [x, w] : pw) {
        c += w;
        if (!atoms_.empty() && atoms_.back() == x) {
          atom_cum_.back() = c;
        } else {
          atoms_.push_back(x);
          atom_cum_.push_back(c);
        }
      }
    }
  }

  void breakpoints(std::vector<double>& out) const {
    out.insert(out.end(), edges_.begin(), edges_.end());
    out.insert(out.end(), atoms_.begin(), atoms_.end());
  }

  // Right limit F(x+).
  double right(double x) const { return is_hist() ? hist_value(x) : atoms_upto(x, true); }
  // Left limit F(x-).
  double left(double x) const { return is_hist() ? hist_value(x) : atoms_upto(x, false); }

 private:
  bool is_hist() const { return !edges_.empty(); }

  double hist_value(double x) const {
    if (x <= edges_.front()) return 0.0;
    if (x >= edges_.back()) return cum_.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), x) - edges_.begin()) - 1;
    const double w = (x - edges_[k]) / (edges_[k + 1] - edges_[k]);
    return cum_[k] + w * (cum_[k + 1] - cum_[k]);
  }

  double atoms_upto(double x, bool inclusive) const {
    const auto it = inclusive ? std::upper_bound(atoms_.begin(), atoms_.end(), x)
                              : std::lower_bound(atoms_.begin(), atoms_.end(), x);
    if (it == atoms_.begin()) return 0.0;
    return atom_cum_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
  }

  std::vector<double> edges_, cum_;
  std::vector<double> atoms_, atom_cum_;
};

// Integral over [0, len] of |d0 + (d1 - d0) s / len|.
inline double abs_linear_integral(double d0, double d1, double len) {
  if ((d0 >= 0.0) == (d1 >= 0.0) || d0 == 0.0 || d1 == 0.0) return 0.5 * len * (std::abs(d0) + std::abs(d1));
  return 0.5 * len * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
}

}  // namespace detail

// 1D Wasserstein-1 distance with the ground metric |x - y|, computed as the
// integral of |F_mu - F_nu|. Dominates the distance under min(|x - y|, 1).
inline double wasserstein1(const MeasureSnapshot& mu, const MeasureSnapshot& nu) {
  if (mu.dimension != 1 || nu.dimension != 1)
    throw std::invalid_argument("wasserstein1 is one-dimensional only; use tv_histogram");
  detail::require_probability(mu, "wasserstein1");
  detail::require_probability(nu, "wasserstein1");
  const detail::Cdf1D f(mu), g(nu);
  std::vector<double> xs;
  f.breakpoints(xs);
  g.breakpoints(xs);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double a = xs[k], b = xs[k + 1];
    total += detail::abs_linear_integral(f.right(a) - g.right(a), f.left(b) - g.left(b), b - a);
  }
  return total;
}

// Bins a measure onto `spec`. Histograms must already use the same edges.
inline std::vector<double> bin_masses(const MeasureSnapshot& m, const HistogramSpec& spec) {
  if (m.is_histogram()) {
    if (!(m.bins == spec)) throw std::invalid_argument("histogram bin edges do not match");
    return m.masses;
  }
  if (m.dimension != spec.dimension()) throw std::invalid_argument("histogram dimension does not match the measure");
  std::vector<double> out(spec.size(), 0.0);
  for (std::size_t i = 0; i < m.weights.size(); ++i)
    out[spec.locate({m.points.data() + i * m.dimension, m.dimension})] += m.weights[i];
  return out;
}

inline MeasureSnapshot to_histogram(const MeasureSnapshot& m, const HistogramSpec& spec) {
  return MeasureSnapshot::histogram(spec, bin_masses(m, spec));
}

// Half the L1 distance between bin masses, in [0, 1].
inline double tv_histogram(const MeasureSnapshot& mu, const MeasureSnapshot& nu, const HistogramSpec& spec) {
  detail::require_probability(mu, "tv_histogram");
  detail::require_probability(nu, "tv_histogram");
  const auto p = bin_masses(mu, spec), q = bin_masses(nu, spec);
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return std::min(1.0, 0.5 * s);
}

// Least-squares slope of J^N over snapshots with t in [t0, t1].
inline double killing_rate(const TrajectorySeries& series, double t0, double t1) {
  if (!(t1 > t0)) throw std::invalid_argument("killing_rate: window must satisfy t1 > t0");
  const double tol = 1e-9 * std::max(series.dt, 1e-12);
  double st = 0.0, sj = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < series.size(); ++k)
    if (series.times[k] >= t0 - tol && series.times[k] <= t1 + tol) {
      st += series.times[k];
      sj += series.jump_process(k);
      ++n;
    }
  if (n < 3) throw std::invalid_argument("killing_rate: fewer than 3 snapshots in the window");
  const double tm = st / static_cast<double>(n), jm = sj / static_cast<double>(n);
  double stt = 0.0, stj = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k)
    if (series.times[k] >= t0 - tol && series.times[k] <= t1 + tol) {
      const double dt = series.times[k] - tm;
      stt += dt * dt;
      stj += dt * (series.jump_process(k) - jm);
    }
  return stj / stt;
}

// Average of snapshot empirical measures taken every `spacing` after `burn_in`.
inline MeasureSnapshot stationary_qsd_estimate(const TrajectorySeries& series, double burn_in, double spacing,
                                               const HistogramSpec& spec) {
  if (!(spacing > 0.0)) throw std::invalid_argument("stationary_qsd_estimate: spacing must be positive");
  if (series.times.empty() || series.times.back() < burn_in + 10.0 * spacing)
    throw std::invalid_argument("stationary_qsd_estimate: series must extend past burn_in + 10 * spacing");
  const double tol = 1e-9 * std::max(series.dt, 1e-12) + 1e-12;
  std::vector<double> acc(spec.size(), 0.0);
  std::size_t used = 0;
  double next = burn_in;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series.times[k] < next - tol) continue;
    const auto snap = MeasureSnapshot::empirical(series.snapshot(k), series.dimension);
    const auto masses = bin_masses(snap, spec);
    for (std::size_t b = 0; b < acc.size(); ++b) acc[b] += masses[b];
    ++used;
    next = series.times[k] + spacing;
  }
  double total = 0.0;
  for (double& a : acc) total += (a /= static_cast<double>(used));
  for (double& a : acc) a /= total;
  return MeasureSnapshot::histogram(spec, std::move(acc));
}

// Mass of {x : d(x, dU) < delta}. Histogram bins count by overlap length in 1D
// and by bin centre otherwise.
inline double boundary_mass(const MeasureSnapshot& m, const Domain& domain, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("boundary_mass: delta must be positive");
  double mass = 0.0;
  if (!m.is_histogram()) {
    for (std::size_t i = 0; i < m.weights.size(); ++i)
      if (domain.boundary_distance({m.points.data() + i * m.dimension, m.dimension}) < delta) mass += m.weights[i];
    return mass;
  }
  if (m.dimension == 1 && domain.dimension() == 1) {
    const double lo = domain.kind() == DomainKind::ball ? domain.center()[0] - domain.radius() : domain.lower()[0];
    const double hi = domain.kind() == DomainKind::ball ? domain.center()[0] + domain.radius() : domain.upper()[0];
    const auto& e = m.bins.edges[0];
    for (std::size_t k = 0; k + 1 < e.size(); ++k) {
      const double width = e[k + 1] - e[k];
      const double left = std::max(0.0, std::min(e[k + 1], lo + delta) - std::max(e[k], lo));
      const double right = std::max(0.0, std::min(e[k + 1], hi) - std::max(e[k], hi - delta));
      mass += m.masses[k] * std::min(1.0, (left + right) / width);
    }
    return mass;
  }
  const auto& edges = m.bins.edges;
  std::vector<std::size_t> idx(edges.size(), 0);
  Point centre(edges.size());
  for (std::size_t flat = 0; flat < m.masses.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = edges.size(); k-- > 0;) {
      const std::size_t nb = edges[k].size() - 1;
      idx[k] = rem % nb;
      rem /= nb;
      centre[k] = 0.5 * (edges[k][idx[k]] + edges[k][idx[k] + 1]);
    }
    if (domain.contains(centre) && domain.boundary_distance(centre) < delta) mass += m.masses[flat];
  }
  return mass;
}

// Kolmogorov-Smirnov statistic of `samples` against Exp(lambda).
inline double exp_ks_test(std::vector<double> samples, double lambda) {
  if (samples.empty()) throw std::invalid_argument("exp_ks_test: no samples");
  if (!(lambda > 0.0)) throw std::invalid_argument("exp_ks_test: lambda must be positive");
  for (double s : samples)
    if (!(s > 0.0)) throw std::invalid_argument("exp_ks_test: killing times must be positive");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = -std::expm1(-lambda * samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Asymptotic Kolmogorov p-value P(D_n >= d), with the Stephens small-sample correction.
inline double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace fvqsd
