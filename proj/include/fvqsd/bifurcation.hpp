#pragma once

// QSDs of dX = gamma E[X | tau > t] dt + dW on (-1, 1).
//
// A law with constant drift c has principal eigenfunction e^{c x} cos(pi x / 2),
// whose mean is  g(c) = tanh(c) - 8 c / (4 c^2 + pi^2).  Self-consistency of the
// drift c = gamma * mean gives the scalar equation for the stationary mean m:
//     m = F(m) = tanh(gamma m) - 8 gamma m / (4 gamma^2 m^2 + pi^2),
// and the QSD is the tilted profile with tilt c = gamma * m (not m itself).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace fvqsd::example {

inline constexpr double kScanIntervals = 10000;  // over [-1, 1]
inline constexpr double kRootTolerance = 1e-12;

// pi^2 / (pi^2 - 8): where F'(0) = 1.
inline double critical_gamma() {
  constexpr double p2 = std::numbers::pi * std::numbers::pi;
  return p2 / (p2 - 8.0);
}

// Mean of the normalised density proportional to e^{c x} cos(pi x / 2) on (-1, 1).
inline double tilted_mean(double c) {
  constexpr double p2 = std::numbers::pi * std::numbers::pi;
  return std::tanh(c) - 8.0 * c / (4.0 * c * c + p2);
}

inline double mean_map(double gamma, double m) { return tilted_mean(gamma * m); }

// Normalised tilted QSD density A e^{c x} cos(pi x / 2).
inline double tilted_density(double c, double x) {
  constexpr double pi = std::numbers::pi;
  if (!(x > -1.0 && x < 1.0)) return 0.0;
  // A = (c^2 + pi^2/4) / (pi cosh c); write e^{c x} / cosh c stably.
  const double ratio = 2.0 * std::exp(c * x - std::abs(c)) / (1.0 + std::exp(-2.0 * std::abs(c)));
  return (c * c + 0.25 * pi * pi) / pi * ratio * std::cos(0.5 * pi * x);
}

// Eigenvalue of the constant-drift problem: pi^2 / 8 + c^2 / 2.
inline double tilted_eigenvalue(double c) { return std::numbers::pi * std::numbers::pi / 8.0 + 0.5 * c * c; }

namespace detail {

template <class F>
double bisect(F&& f, double lo, double hi, double flo) {
  while (hi - lo > kRootTolerance) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// All roots of F(m) - m on [-1, 1]: sign-change scan on 1e4 intervals plus
// bisection to 1e-12. F is odd, so the positive half is scanned and mirrored;
// 0 is always a root.
inline std::vector<double> bifurcation_roots(double gamma) {
  auto g = [gamma](double m) { return mean_map(gamma, m) - m; };
  const int half = static_cast<int>(kScanIntervals / 2);
  const double h = 1.0 / half;
  std::vector<double> positive;
  double prev_x = h, prev = g(h);
  for (int k = 2; k <= half; ++k) {
    const double x = k * h;
    const double fx = g(x);
    if (fx == 0.0) {
      positive.push_back(x);
    } else if (prev != 0.0 && (fx > 0.0) != (prev > 0.0)) {
      positive.push_back(detail::bisect(g, prev_x, x, prev));
    }
    prev_x = x;
    prev = fx;
  }
  std::vector<double> roots;
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) roots.push_back(-*it);
  roots.push_back(0.0);
  roots.insert(roots.end(), positive.begin(), positive.end());
  return roots;
}

// Bisection in gamma on the number of roots, between a gamma with one root and
// one with more, down to width `tol`.
inline std::pair<double, double> bracket_pitchfork(double gamma_lo, double gamma_hi, double tol = 1e-6) {
  while (gamma_hi - gamma_lo > tol) {
    const double mid = 0.5 * (gamma_lo + gamma_hi);
    if (bifurcation_roots(mid).size() > 1)
      gamma_hi = mid;
    else
      gamma_lo = mid;
  }
  return {gamma_lo, gamma_hi};
}

}  // namespace fvqsd::example
