#pragma once

// Measure-dependent drift functionals b(mu, x). The measure enters only through
// a MeasureSummary computed once per step from the particle positions (or from
// a grid density in the PDE oracle).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "fvqsd/geometry.hpp"

namespace fvqsd {

struct MeasureSummary {
  std::size_t dimension = 0;
  std::size_t count = 0;
  std::vector<double> mean;
  // Raw second moments E[x_k x_l], row-major dimension x dimension.
  std::vector<double> second_moment;
  // Weighted support, kept only when a drift needs the full measure.
  std::vector<double> support;
  std::vector<double> support_weights;

  double variance(std::size_t axis) const {
    return second_moment[axis * dimension + axis] - mean[axis] * mean[axis];
  }
};

// Summary of the empirical measure (1/N) sum delta_{x_i}; positions are row-major N x dimension.
inline MeasureSummary summarize(std::span<const double> positions, std::size_t dimension, bool keep_support = false) {
  if (dimension == 0 || positions.empty()) throw std::invalid_argument("summarize: empty list of positions");
  if (positions.size() % dimension != 0) throw std::invalid_argument("summarize: ragged position array");
  const std::size_t n = positions.size() / dimension;
  MeasureSummary s;
  s.dimension = dimension;
  s.count = n;
  s.mean.assign(dimension, 0.0);
  s.second_moment.assign(dimension * dimension, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = positions.data() + i * dimension;
    for (std::size_t k = 0; k < dimension; ++k) {
      s.mean[k] += x[k];
      for (std::size_t l = 0; l < dimension; ++l) s.second_moment[k * dimension + l] += x[k] * x[l];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& m : s.mean) m *= inv;
  for (double& m : s.second_moment) m *= inv;
  if (keep_support) {
    s.support.assign(positions.begin(), positions.end());
    s.support_weights.assign(n, inv);
  }
  return s;
}

// Summary of a weighted point measure; weights are normalised internally.
inline MeasureSummary summarize_weighted(std::span<const double> points, std::span<const double> weights,
                                         std::size_t dimension, bool keep_support = false) {
  if (dimension == 0 || weights.empty()) throw std::invalid_argument("summarize_weighted: empty measure");
  if (points.size() != weights.size() * dimension) throw std::invalid_argument("summarize_weighted: size mismatch");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("summarize_weighted: nonpositive total mass");
  MeasureSummary s;
  s.dimension = dimension;
  s.count = weights.size();
  s.mean.assign(dimension, 0.0);
  s.second_moment.assign(dimension * dimension, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i] / total;
    const double* x = points.data() + i * dimension;
    for (std::size_t k = 0; k < dimension; ++k) {
      s.mean[k] += w * x[k];
      for (std::size_t l = 0; l < dimension; ++l) s.second_moment[k * dimension + l] += w * x[k] * x[l];
    }
  }
  if (keep_support) {
    s.support.assign(points.begin(), points.end());
    s.support_weights.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) s.support_weights[i] = weights[i] / total;
  }
  return s;
}

enum class DriftVariant { zero, mean_attraction, clamped_linear, kernel_field };

struct DriftSpec {
  DriftVariant variant = DriftVariant::zero;
  double gamma = 0.0;      // strength for mean_attraction / clamped_linear / kernel_field
  double clamp = 0.0;      // per-axis clip of (mean - x) for clamped_linear
  double bandwidth = 0.0;  // Gaussian kernel width for kernel_field
  double bound_B = 0.0;
  double lipschitz_C = 0.0;

  bool needs_support() const { return variant == DriftVariant::kernel_field; }
  // True when b(mu, x) does not depend on x.
  bool is_spatially_constant() const {
    return variant == DriftVariant::zero || variant == DriftVariant::mean_attraction;
  }

  static DriftSpec zero() { return {}; }

  // b(mu, x) = gamma * mean(mu). The default bound is gamma * sup_{x in U} |x|,
  // which no mean of a law on U can exceed, so clamping stays inactive.
  static DriftSpec mean_attraction(double gamma, const Domain& domain) {
    DriftSpec d;
    d.variant = DriftVariant::mean_attraction;
    d.gamma = gamma;
    d.bound_B = std::abs(gamma) * domain.max_norm();
    d.lipschitz_C = 2.0 * std::abs(gamma) * domain.max_norm();
    return d;
  }

  // b(mu, x) = gamma * clip(mean(mu) - x, [-clamp, clamp]) per axis.
  static DriftSpec clamped_linear(double gamma, double clamp, const Domain& domain) {
    if (!(clamp > 0.0)) throw std::invalid_argument("clamped_linear: clamp must be positive");
    DriftSpec d;
    d.variant = DriftVariant::clamped_linear;
    d.gamma = gamma;
    d.clamp = clamp;
    d.bound_B = std::abs(gamma) * clamp * std::sqrt(static_cast<double>(domain.dimension()));
    d.lipschitz_C = 2.0 * std::abs(gamma) * domain.max_norm();
    return d;
  }

  // Gaussian mean-shift field: b(mu, x) = strength * (E_K[y] - x), the displacement
  // towards the kernel-weighted local mean of mu around x.
  static DriftSpec kernel_field(double strength, double bandwidth, const Domain& domain) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kernel_field: bandwidth must be positive");
    DriftSpec d;
    d.variant = DriftVariant::kernel_field;
    d.gamma = strength;
    d.bandwidth = bandwidth;
    const double diam = domain.diameter();
    d.bound_B = std::abs(strength) * diam;
    const double kernel_floor = std::exp(-diam * diam / (2.0 * bandwidth * bandwidth));
    d.lipschitz_C = 4.0 * std::abs(strength) * diam / kernel_floor;
    return d;
  }
};

// Writes b(mu, x) into out (size = dimension), clamped to |b| <= bound_B.
inline void evaluate_drift_into(const DriftSpec& spec, const MeasureSummary& summary, std::span<const double> x,
                                std::span<double> out) {
  const std::size_t dim = x.size();
  switch (spec.variant) {
    case DriftVariant::zero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case DriftVariant::mean_attraction:
      for (std::size_t k = 0; k < dim; ++k) out[k] = spec.gamma * summary.mean[k];
      break;
    case DriftVariant::clamped_linear:
      for (std::size_t k = 0; k < dim; ++k)
        out[k] = spec.gamma * std::clamp(summary.mean[k] - x[k], -spec.clamp, spec.clamp);
      break;
    case DriftVariant::kernel_field: {
      if (summary.support_weights.empty())
        throw std::invalid_argument("kernel_field drift needs a summary with support");
      const std::size_t n = summary.support_weights.size();
      const double inv2h2 = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
      double nearest = std::numeric_limits<double>::infinity();
      std::vector<double> d2(n);
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double diff = summary.support[j * dim + k] - x[k];
          s += diff * diff;
        }
        d2[j] = s;
        nearest = std::min(nearest, s);
      }
      double denom = 0.0;
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double w = summary.support_weights[j] * std::exp(-(d2[j] - nearest) * inv2h2);
        denom += w;
        for (std::size_t k = 0; k < dim; ++k) out[k] += w * (summary.support[j * dim + k] - x[k]);
      }
      for (std::size_t k = 0; k < dim; ++k) out[k] *= spec.gamma / denom;
      break;
    }
  }
  double norm2 = 0.0;
  for (std::size_t k = 0; k < dim; ++k) norm2 += out[k] * out[k];
  const double norm = std::sqrt(norm2);
  if (norm > spec.bound_B) {
    const double scale = norm > 0.0 ? spec.bound_B / norm : 0.0;
    for (std::size_t k = 0; k < dim; ++k) out[k] *= scale;
  }
}

inline Point evaluate_drift(const DriftSpec& spec, const MeasureSummary& summary, std::span<const double> x) {
  Point out(x.size());
  evaluate_drift_into(spec, summary, x, out);
  return out;
}

}  // namespace fvqsd
