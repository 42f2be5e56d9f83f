#pragma once

// Deterministic 1D ground truth for the particle system:
//   * the conditioned law m_t and J_t = -ln P(tau > t) from
//       du/dt = 1/2 u'' - (b(u/|u|, x) u)',  u = 0 on the boundary,
//     with Crank-Nicolson diffusion and explicit upwind drift lagged one step;
//   * the principal Dirichlet eigenpair of 1/2 d^2/dx^2 - d/dx(v .) for a frozen
//     velocity field (inverse power iteration, centred fluxes);
//   * QSDs as damped fixed points of "freeze drift, take principal eigenfunction".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fvqsd/drift.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/estimators.hpp"
#include "fvqsd/geometry.hpp"

namespace fvqsd {

struct Grid1D {
  double a = -1.0;
  double b = 1.0;
  std::size_t interior = 0;  // M

  Grid1D(double lo, double hi, std::size_t m) : a(lo), b(hi), interior(m) {
    if (!(lo < hi)) throw std::invalid_argument("Grid1D: need a < b");
    if (m < 16) throw std::invalid_argument("Grid1D: need at least 16 interior nodes");
  }
  static Grid1D over(const Domain& domain, std::size_t m) {
    if (domain.dimension() != 1) throw std::invalid_argument("the PDE oracle is one-dimensional");
    const bool ball = domain.kind() == DomainKind::ball;
    return {ball ? domain.center()[0] - domain.radius() : domain.lower()[0],
            ball ? domain.center()[0] + domain.radius() : domain.upper()[0], m};
  }

  double dx() const { return (b - a) / static_cast<double>(interior + 1); }
  double node(std::size_t i) const { return a + static_cast<double>(i + 1) * dx(); }
  // Face between node i-1 and node i; face 0 sits between the left wall and node 0.
  double face(std::size_t i) const { return a + (static_cast<double>(i) + 0.5) * dx(); }
  std::vector<double> nodes() const {
    std::vector<double> x(interior);
    for (std::size_t i = 0; i < interior; ++i) x[i] = node(i);
    return x;
  }
  // Trapezoidal integral with zero boundary values.
  double integrate(std::span<const double> f) const {
    double s = 0.0;
    for (double v : f) s += v;
    return s * dx();
  }
};

namespace detail {

// Solves a tridiagonal system in place: lower[i] couples i to i-1, upper[i] to i+1.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<double> rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n);
  double denom = diag[0];
  c[0] = upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    c[i] = i + 1 < n ? upper[i] / denom : 0.0;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

inline MeasureSummary grid_summary(const Grid1D& grid, std::span<const double> density, bool keep_support) {
  const auto x = grid.nodes();
  return summarize_weighted(x, density, 1, keep_support);
}

}  // namespace detail

// Drift b(m, x) evaluated at the M + 1 cell faces for the law with this density.
inline std::vector<double> face_velocity(const DriftSpec& drift, const Grid1D& grid, std::span<const double> density) {
  const MeasureSummary s = detail::grid_summary(grid, density, drift.needs_support());
  std::vector<double> v(grid.interior + 1);
  double out = 0.0;
  if (drift.is_spatially_constant()) {
    const double x0 = grid.face(0);
    evaluate_drift_into(drift, s, {&x0, 1}, {&out, 1});
    std::fill(v.begin(), v.end(), out);
    return v;
  }
  for (std::size_t i = 0; i <= grid.interior; ++i) {
    const double x = grid.face(i);
    evaluate_drift_into(drift, s, {&x, 1}, {&out, 1});
    v[i] = out;
  }
  return v;
}

struct PdeState {
  std::vector<double> density;  // at interior nodes; boundary values are zero
  double time = 0.0;
};

struct PdeSeries {
  std::vector<double> times;
  std::vector<double> jump;  // J_t = -ln mass(u_t)
  std::vector<std::vector<double>> laws;  // m_t at interior nodes, unit mass
};

inline PdeState initial_state(const Grid1D& grid, std::vector<double> density) {
  if (density.size() != grid.interior) throw std::invalid_argument("initial density has the wrong length");
  for (double v : density)
    if (!(v >= 0.0)) throw std::invalid_argument("initial density must be nonnegative");
  const double mass = grid.integrate(density);
  if (!(mass > 0.0)) throw std::invalid_argument("initial density has zero mass");
  for (double& v : density) v /= mass;
  return {std::move(density), 0.0};
}

// Point masses at the nodes with weights proportional to the density.
inline MeasureSnapshot grid_measure(const Grid1D& grid, std::span<const double> density) {
  std::vector<double> w(density.begin(), density.end());
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return MeasureSnapshot::weighted(grid.nodes(), std::move(w), 1);
}

// Bin masses of the piecewise-linear interpolant of the grid density (zero at
// both walls), renormalised to 1.
inline MeasureSnapshot grid_histogram(const Grid1D& grid, std::span<const double> density, const HistogramSpec& spec) {
  if (spec.dimension() != 1) throw std::invalid_argument("grid_histogram: one-dimensional bins only");
  const std::size_t m = grid.interior;
  std::vector<double> xs(m + 2), us(m + 2, 0.0);
  xs[0] = grid.a;
  xs[m + 1] = grid.b;
  for (std::size_t i = 0; i < m; ++i) {
    xs[i + 1] = grid.node(i);
    us[i + 1] = density[i];
  }
  auto value = [&](std::size_t k, double x) {
    const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return (1.0 - w) * us[k] + w * us[k + 1];
  };
  const auto& e = spec.edges[0];
  std::vector<double> masses(e.size() - 1, 0.0);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    for (std::size_t bin = 0; bin + 1 < e.size(); ++bin) {
      const double lo = std::max(xs[k], e[bin]), hi = std::min(xs[k + 1], e[bin + 1]);
      if (hi <= lo) continue;
      masses[bin] += 0.5 * (hi - lo) * (value(k, lo) + value(k, hi));
    }
  }
  double total = 0.0;
  for (double v : masses) total += v;
  for (double& v : masses) v /= total;
  return MeasureSnapshot::histogram(spec, std::move(masses));
}

inline constexpr double kMassUnderflow = 1e-300;

// Evolves the conditioned law to `horizon`, recording every `output_every`
// (rounded to whole steps). The unnormalised mass is carried as -J so the
// density itself stays normalised.
inline PdeSeries evolve_conditional_law(const PdeState& initial, const DriftSpec& drift, double horizon, double dt,
                                        const Grid1D& grid, double output_every) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_conditional_law: dt must be positive");
  if (horizon < 0.0) throw std::invalid_argument("evolve_conditional_law: negative horizon");
  const std::size_t m = grid.interior;
  if (initial.density.size() != m) throw std::invalid_argument("initial state does not match the grid");
  const double init_mass = grid.integrate(initial.density);
  if (std::abs(init_mass - 1.0) > 1e-9) throw std::invalid_argument("initial state must have unit mass");

  const double dx = grid.dx();
  const double mu = dt / (4.0 * dx * dx);
  const double courant = dt / dx;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(output_every / dt)));

  PdeSeries out;
  std::vector<double> u = initial.density;
  double log_mass = 0.0;
  out.times.push_back(initial.time);
  out.jump.push_back(0.0);
  out.laws.push_back(u);

  const std::vector<double> lower(m, -mu), upper(m, -mu), diag(m, 1.0 + 2.0 * mu);
  std::vector<double> rhs(m), flux(m + 1);
  for (std::size_t s = 1; s <= steps; ++s) {
    const auto v = face_velocity(drift, grid, u);
    double vmax = 0.0;
    for (double vi : v) vmax = std::max(vmax, std::abs(vi));
    if (vmax * courant > 1.0)
      throw NumericalError("evolve_conditional_law: drift Courant number " + std::to_string(vmax * courant) +
                           " exceeds 1");
    for (std::size_t f = 0; f <= m; ++f) {
      const double left = f == 0 ? 0.0 : u[f - 1];
      const double right = f == m ? 0.0 : u[f];
      flux[f] = std::max(v[f], 0.0) * left + std::min(v[f], 0.0) * right;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double left = i == 0 ? 0.0 : u[i - 1];
      const double right = i + 1 == m ? 0.0 : u[i + 1];
      rhs[i] = u[i] + mu * (left - 2.0 * u[i] + right) - courant * (flux[i + 1] - flux[i]);
    }
    detail::solve_tridiagonal(lower, diag, upper, rhs);
    const double mass = grid.integrate(rhs);
    if (!(mass > 0.0)) throw NumericalError("evolve_conditional_law: mass vanished");
    log_mass += std::log(mass);
    if (log_mass < std::log(kMassUnderflow))
      throw NumericalError("evolve_conditional_law: horizon too long, survival mass underflows 1e-300");
    for (std::size_t i = 0; i < m; ++i) u[i] = rhs[i] / mass;
    if (s % stride == 0 || s == steps) {
      out.times.push_back(initial.time + static_cast<double>(s) * dt);
      out.jump.push_back(-log_mass);
      out.laws.push_back(u);
    }
  }
  return out;
}

struct Eigenpair {
  std::vector<double> phi;  // unit mass
  double lambda = 0.0;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxEigenIterations = 100000;
inline constexpr double kEigenTolerance = 1e-10;

// Principal eigenpair of A u = -1/2 u'' + (v u)' with Dirichlet walls; A phi = lambda phi.
inline Eigenpair principal_eigenpair(std::span<const double> face_v, const Grid1D& grid) {
  const std::size_t m = grid.interior;
  if (face_v.size() != m + 1) throw std::invalid_argument("principal_eigenpair: need one velocity per face");
  const double dx = grid.dx();
  const double d2 = 0.5 / (dx * dx), c = 0.5 / dx;
  std::vector<double> lower(m), diag(m), upper(m);
  for (std::size_t i = 0; i < m; ++i) {
    diag[i] = 2.0 * d2 + c * (face_v[i + 1] - face_v[i]);
    upper[i] = -d2 + c * face_v[i + 1];
    lower[i] = -d2 - c * face_v[i];
  }
  Eigenpair out;
  out.phi.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = static_cast<double>(i + 1) / static_cast<double>(m + 1);
    out.phi[i] = s * (1.0 - s);
  }
  const double m0 = grid.integrate(out.phi);
  for (double& p : out.phi) p /= m0;

  double lambda = 0.0;
  std::vector<double> psi(m);
  for (std::size_t it = 1; it <= kMaxEigenIterations; ++it) {
    psi = out.phi;
    detail::solve_tridiagonal(lower, diag, upper, psi);
    const double mass = grid.integrate(psi);
    const double next = 1.0 / mass;  // mass(phi) = 1
    for (std::size_t i = 0; i < m; ++i) out.phi[i] = psi[i] / mass;
    if (it > 1 && std::abs(next - lambda) < kEigenTolerance * std::max(1.0, std::abs(next))) {
      out.lambda = next;
      out.iterations = it;
      return out;
    }
    lambda = next;
  }
  throw NumericalError("principal_eigenpair: no convergence after 1e5 inverse iterations");
}

struct QsdResult {
  std::vector<double> density;  // unit mass on the interior nodes
  double lambda = 0.0;
  double mean = 0.0;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxFixedPointIterations = 1000;
inline constexpr double kFixedPointDamping = 0.5;

inline double grid_mean(const Grid1D& grid, std::span<const double> density) {
  double s = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) s += grid.node(i) * density[i];
  return s * grid.dx() / grid.integrate(density);
}

// Discrete weak-form residual of lambda pi + 1/2 pi'' - (b(pi, .) pi)': the max
// over nodes of its integral against the unit-height hat function there.
inline double qsd_residual(const DriftSpec& drift, const Grid1D& grid, const QsdResult& q) {
  const auto v = face_velocity(drift, grid, q.density);
  const std::size_t m = grid.interior;
  const double dx = grid.dx();
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double l = i == 0 ? 0.0 : q.density[i - 1];
    const double r = i + 1 == m ? 0.0 : q.density[i + 1];
    const double p = q.density[i];
    const double diffusion = 0.5 * (l - 2.0 * p + r) / (dx * dx);
    const double transport = (v[i + 1] * (p + r) - v[i] * (l + p)) / (2.0 * dx);
    worst = std::max(worst, std::abs(q.lambda * p + diffusion - transport));
  }
  return worst * dx;
}

// Damped fixed-point iteration pi <- (pi + phi(b(pi, .))) / 2 until the TV size
// of the update drops below tol. Which QSD is reached depends on the guess.
inline QsdResult solve_qsd_fixed_point(const DriftSpec& drift, const Grid1D& grid, double tol,
                                       std::vector<double> guess) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_qsd_fixed_point: tol must be positive");
  QsdResult q;
  q.density = initial_state(grid, std::move(guess)).density;
  for (std::size_t it = 1; it <= kMaxFixedPointIterations; ++it) {
    const auto v = face_velocity(drift, grid, q.density);
    const Eigenpair ep = principal_eigenpair(v, grid);
    double change = 0.0;
    for (std::size_t i = 0; i < grid.interior; ++i) {
      const double next = (1.0 - kFixedPointDamping) * q.density[i] + kFixedPointDamping * ep.phi[i];
      change += std::abs(next - q.density[i]);
      q.density[i] = next;
    }
    change *= 0.5 * grid.dx();
    q.lambda = ep.lambda;
    if (change < tol) {
      // Finish on the eigenpair of the drift frozen at the converged law.
      const Eigenpair last = principal_eigenpair(face_velocity(drift, grid, ep.phi), grid);
      q.density = last.phi;
      q.lambda = last.lambda;
      q.mean = grid_mean(grid, q.density);
      q.iterations = it;
      return q;
    }
  }
  throw NumericalError("solve_qsd_fixed_point: no stable fixed point from this guess after 1000 iterations");
}

}  // namespace fvqsd
