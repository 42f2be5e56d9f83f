#pragma once

// Bounded open domains with closed-form boundary queries: intervals,
// axis-aligned boxes and Euclidean balls.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fvqsd {

using Point = std::vector<double>;

enum class DomainKind { interval, box, ball };

class Domain {
 public:
  static Domain interval(double a, double b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
      throw std::invalid_argument("interval requires finite a < b");
    Domain d(DomainKind::interval);
    d.lo_ = {a};
    d.hi_ = {b};
    return d;
  }

  static Domain box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("box corners must have equal nonzero size");
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (!(lo[k] < hi[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k]))
        throw std::invalid_argument("box requires finite lo < hi on every axis");
    Domain d(DomainKind::box);
    d.lo_ = std::move(lo);
    d.hi_ = std::move(hi);
    return d;
  }

  static Domain ball(std::vector<double> center, double radius) {
    if (center.empty()) throw std::invalid_argument("ball center must be nonempty");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("ball radius must be positive");
    Domain d(DomainKind::ball);
    d.center_ = std::move(center);
    d.radius_ = radius;
    return d;
  }

  DomainKind kind() const { return kind_; }
  std::size_t dimension() const { return kind_ == DomainKind::ball ? center_.size() : lo_.size(); }

  // Box/interval accessors.
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }
  // Ball accessors.
  const std::vector<double>& center() const { return center_; }
  double radius() const { return radius_; }

  bool contains(std::span<const double> x) const {
    check_dimension(x);
    if (kind_ == DomainKind::ball) return squared_offset(x) < radius_ * radius_;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (!(x[k] > lo_[k] && x[k] < hi_[k])) return false;
    return true;
  }

  // d(x, dU) for x in the closure of U.
  double boundary_distance(std::span<const double> x) const {
    check_dimension(x);
    if (kind_ == DomainKind::ball) {
      const double dist = radius_ - std::sqrt(squared_offset(x));
      if (dist < 0.0) throw std::invalid_argument("boundary_distance: point outside the closed ball");
      return dist;
    }
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double axis = std::min(x[k] - lo_[k], hi_[k] - x[k]);
      if (axis < 0.0) throw std::invalid_argument("boundary_distance: point outside the closed box");
      dist = std::min(dist, axis);
    }
    return dist;
  }

  double interior_ball_radius() const {
    if (kind_ == DomainKind::ball) return radius_;
    double shortest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lo_.size(); ++k) shortest = std::min(shortest, hi_[k] - lo_[k]);
    return 0.5 * shortest;
  }

  // Largest Euclidean norm over the closure; bounds |E[X]| for any law on U.
  double max_norm() const {
    if (kind_ == DomainKind::ball) {
      double c2 = 0.0;
      for (double c : center_) c2 += c * c;
      return std::sqrt(c2) + radius_;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < lo_.size(); ++k) {
      const double m = std::max(std::abs(lo_[k]), std::abs(hi_[k]));
      s += m * m;
    }
    return std::sqrt(s);
  }

  double diameter() const {
    if (kind_ == DomainKind::ball) return 2.0 * radius_;
    double s = 0.0;
    for (std::size_t k = 0; k < lo_.size(); ++k) s += (hi_[k] - lo_[k]) * (hi_[k] - lo_[k]);
    return std::sqrt(s);
  }

  // Smallest s in (0,1] with x_prev + s (x_next - x_prev) on dU, or nullopt when
  // the segment stays inside. Both domain families are convex, so the segment
  // leaves U iff its endpoint does.
  std::optional<double> crossing_fraction(std::span<const double> x_prev, std::span<const double> x_next) const {
    check_dimension(x_prev);
    check_dimension(x_next);
    if (contains(x_next)) return std::nullopt;
    if (kind_ == DomainKind::ball) {
      double a = 0.0, b = 0.0, c = -radius_ * radius_;
      for (std::size_t k = 0; k < x_prev.size(); ++k) {
        const double v = x_next[k] - x_prev[k];
        const double p = x_prev[k] - center_[k];
        a += v * v;
        b += v * p;
        c += p * p;
      }
      // a s^2 + 2 b s + c = 0 with c < 0: exactly one positive root.
      const double disc = std::sqrt(std::max(0.0, b * b - a * c));
      const double s = b > 0.0 ? -c / (b + disc) : (disc - b) / a;
      return std::clamp(s, std::numeric_limits<double>::min(), 1.0);
    }
    double s = 1.0;
    for (std::size_t k = 0; k < x_prev.size(); ++k) {
      const double v = x_next[k] - x_prev[k];
      if (x_next[k] >= hi_[k]) s = std::min(s, (hi_[k] - x_prev[k]) / v);
      if (x_next[k] <= lo_[k]) s = std::min(s, (lo_[k] - x_prev[k]) / v);
    }
    return s;
  }

 private:
  explicit Domain(DomainKind k) : kind_(k) {}

  void check_dimension(std::span<const double> x) const {
    if (x.size() != dimension())
      throw std::invalid_argument("point has dimension " + std::to_string(x.size()) + ", domain has dimension " +
                                  std::to_string(dimension()));
  }

  double squared_offset(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - center_[k]) * (x[k] - center_[k]);
    return s;
  }

  DomainKind kind_;
  std::vector<double> lo_, hi_;
  std::vector<double> center_;
  double radius_ = 0.0;
};

}  // namespace fvqsd
