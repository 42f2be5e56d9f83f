#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "fvqsd/geometry.hpp"
#include "fvqsd/random.hpp"

namespace fvqsd {

// Initial law for particles and (when it has a density) for the PDE oracle.
struct InitialLaw {
  enum class Kind { uniform, cosine, point };

  Kind kind = Kind::uniform;
  // cosine: density proportional to exp(tilt * x) * cos(pi (x - mid) / L) on an interval.
  double tilt = 0.0;
  // point: every particle starts here.
  Point location;

  static InitialLaw uniform() { return {}; }
  static InitialLaw cosine(double tilt = 0.0) { return {Kind::cosine, tilt, {}}; }
  static InitialLaw at(Point x) { return {Kind::point, 0.0, std::move(x)}; }

  bool has_density() const { return kind != Kind::point; }

  Point sample(const Domain& domain, RandomStream& rng) const {
    const std::size_t dim = domain.dimension();
    switch (kind) {
      case Kind::point:
        if (!domain.contains(location)) throw std::invalid_argument("initial point lies outside the domain");
        return location;
      case Kind::uniform: {
        Point x(dim);
        for (;;) {
          for (std::size_t k = 0; k < dim; ++k) {
            const double lo = domain.kind() == DomainKind::ball ? domain.center()[k] - domain.radius() : domain.lower()[k];
            const double hi = domain.kind() == DomainKind::ball ? domain.center()[k] + domain.radius() : domain.upper()[k];
            x[k] = lo + (hi - lo) * rng.uniform();
          }
          if (domain.contains(x)) return x;
        }
      }
      case Kind::cosine: {
        require_interval(domain);
        const double a = domain.lower()[0], b = domain.upper()[0];
        const double edge = tilt > 0.0 ? b : a;
        for (;;) {
          // Inverse CDF of the untilted profile, then accept with exp(tilt (x - edge)) <= 1.
          const double u = rng.uniform();
          const double x = 0.5 * (a + b) + (b - a) / std::numbers::pi * std::asin(2.0 * u - 1.0);
          if (!(x > a && x < b)) continue;
          if (tilt == 0.0 || rng.uniform() < std::exp(tilt * (x - edge))) return {x};
        }
      }
    }
    throw std::logic_error("unreachable initial law");
  }

  // Unnormalised density at 1D points.
  std::vector<double> density(const Domain& domain, std::span<const double> xs) const {
    require_interval(domain);
    const double a = domain.lower()[0], b = domain.upper()[0];
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = xs[i];
      if (!(x > a && x < b)) {
        out[i] = 0.0;
        continue;
      }
      switch (kind) {
        case Kind::uniform:
          out[i] = 1.0 / (b - a);
          break;
        case Kind::cosine:
          out[i] = std::exp(tilt * x) * std::cos(std::numbers::pi * (x - 0.5 * (a + b)) / (b - a));
          break;
        case Kind::point:
          throw std::invalid_argument("a point-mass initial law has no density");
      }
    }
    return out;
  }

 private:
  static void require_interval(const Domain& domain) {
    if (domain.dimension() != 1) throw std::invalid_argument("cosine-type initial laws are only defined on intervals");
  }
};

}  // namespace fvqsd
