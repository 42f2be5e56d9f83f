#pragma once

// Subcommand runners behind the command-line tool. Each takes a validated
// configuration and writes its CSV outputs into a directory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fvqsd/bessel_bound.hpp"
#include "fvqsd/bifurcation.hpp"
#include "fvqsd/config.hpp"
#include "fvqsd/csv.hpp"
#include "fvqsd/estimators.hpp"
#include "fvqsd/particle_system.hpp"
#include "fvqsd/pde_oracle.hpp"

namespace fvqsd {

namespace fs = std::filesystem;

inline const std::vector<std::string> kSubcommands{"simulate", "pde", "qsd", "bifurcation", "bessel", "compare"};

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

inline std::vector<std::string> coordinate_names(std::size_t dim, const std::string& prefix = "") {
  static const char* xyz[] = {"x", "y", "z"};
  std::vector<std::string> out;
  for (std::size_t k = 0; k < dim; ++k) out.push_back(prefix + (dim <= 3 ? xyz[k] : "x" + std::to_string(k)));
  return out;
}

inline Ensemble initial_ensemble(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (!cfg.explicit_positions.empty()) return init_ensemble(n, *cfg.domain, cfg.explicit_positions, seed);
  return init_ensemble(n, *cfg.domain, cfg.initial, seed);
}

inline std::string window(double a, double b) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.17g:%.17g", a, b);
  return buf;
}

}  // namespace detail

inline void write_trajectory(const TrajectorySeries& series, const fs::path& path) {
  std::vector<std::string> header{"t", "J", "particle_index"};
  for (auto& c : detail::coordinate_names(series.dimension)) header.push_back(c);
  CsvWriter csv(path, header);
  for (std::size_t k = 0; k < series.size(); ++k)
    for (std::size_t i = 0; i < series.count; ++i) {
      csv.field(series.times[k]).field(series.jump_process(k)).field(static_cast<std::uint64_t>(i));
      for (double x : series.position(k, i)) csv.field(x);
      csv.end_row();
    }
}

inline void write_events(const EventLog& log, std::size_t dimension, const fs::path& path) {
  std::vector<std::string> header{"t", "dying", "death_ordinal", "target"};
  for (auto& c : detail::coordinate_names(dimension, "landing_")) header.push_back(c);
  header.push_back("target_pending");
  CsvWriter csv(path, header);
  for (const auto& ev : log.events) {
    csv.field(ev.time).field(static_cast<std::uint64_t>(ev.dying)).field(ev.death_ordinal).field(
        static_cast<std::uint64_t>(ev.target));
    for (double x : ev.landing) csv.field(x);
    csv.field(ev.target_pending).end_row();
  }
}

inline std::vector<fs::path> run_simulate(const ExperimentConfig& cfg, const fs::path& out, int threads) {
  Ensemble ens = detail::initial_ensemble(cfg, *cfg.particles, cfg.seed);
  const StepOptions opts{cfg.bridge_correction, threads};
  const RunResult res = run(ens, *cfg.drift, *cfg.domain, *cfg.horizon, *cfg.dt, cfg.snapshot_interval(), opts);
  std::vector<fs::path> files{out / "trajectory.csv", out / "events.csv", out / "estimates.csv"};
  write_trajectory(res.series, files[0]);
  write_events(res.log, res.series.dimension, files[1]);

  CsvWriter est(files[2], {"metric_name", "t_or_window", "value"});
  const double t_end = res.series.times.back();
  est.field("J").field(t_end).field(res.series.jump_process(res.series.size() - 1)).end_row();
  const auto final_snapshot = MeasureSnapshot::empirical(res.series.snapshot(res.series.size() - 1), res.series.dimension);
  for (double delta : cfg.estimators.boundary_deltas) {
    char name[64];
    std::snprintf(name, sizeof name, "boundary_mass_delta_%g", delta);
    est.field(name).field(t_end).field(boundary_mass(final_snapshot, *cfg.domain, delta)).end_row();
  }
  const double burn = cfg.estimators.burn_in;
  std::size_t in_window = 0;
  for (double t : res.series.times) in_window += t >= burn ? 1 : 0;
  if (in_window >= 3 && t_end > burn)
    est.field("killing_rate").field(detail::window(burn, t_end)).field(killing_rate(res.series, burn, t_end)).end_row();
  if (t_end >= burn + 10.0 * cfg.estimators.spacing) {
    const auto spec = HistogramSpec::covering(*cfg.domain, cfg.estimators.bins);
    const auto qsd = stationary_qsd_estimate(res.series, burn, cfg.estimators.spacing, spec);
    if (cfg.domain->dimension() == 1) {
      files.push_back(out / "qsd_estimate.csv");
      CsvWriter q(files.back(), {"bin_lo", "bin_hi", "mass"});
      const auto& e = spec.edges[0];
      for (std::size_t b = 0; b + 1 < e.size(); ++b) q.field(e[b]).field(e[b + 1]).field(qsd.masses[b]).end_row();
    }
  }
  return files;
}

inline std::vector<double> initial_density(const ExperimentConfig& cfg, const Grid1D& grid) {
  const auto x = grid.nodes();
  return cfg.initial.density(*cfg.domain, x);
}

inline std::vector<fs::path> run_pde(const ExperimentConfig& cfg, const fs::path& out) {
  const Grid1D grid = Grid1D::over(*cfg.domain, cfg.pde.grid_nodes);
  const PdeState init = initial_state(grid, initial_density(cfg, grid));
  const PdeSeries series = evolve_conditional_law(init, *cfg.drift, *cfg.horizon, cfg.pde.dt, grid, cfg.pde.output_every);
  std::vector<fs::path> files{out / "pde_law.csv", out / "pde_J.csv"};
  CsvWriter law(files[0], {"t", "x", "density"});
  for (std::size_t k = 0; k < series.times.size(); ++k)
    for (std::size_t i = 0; i < grid.interior; ++i)
      law.field(series.times[k]).field(grid.node(i)).field(series.laws[k][i]).end_row();
  CsvWriter jcsv(files[1], {"t", "J"});
  for (std::size_t k = 0; k < series.times.size(); ++k) jcsv.field(series.times[k]).field(series.jump[k]).end_row();
  return files;
}

inline std::vector<fs::path> run_qsd(const ExperimentConfig& cfg, const fs::path& out) {
  const Grid1D grid = Grid1D::over(*cfg.domain, cfg.pde.grid_nodes);
  const auto guess = InitialLaw::cosine(cfg.qsd.guess_tilt).density(*cfg.domain, grid.nodes());
  const QsdResult q = solve_qsd_fixed_point(*cfg.drift, grid, cfg.qsd.tol, guess);
  std::vector<fs::path> files{out / "qsd.csv", out / "qsd_summary.csv"};
  CsvWriter csv(files[0], {"x", "density"});
  for (std::size_t i = 0; i < grid.interior; ++i) csv.field(grid.node(i)).field(q.density[i]).end_row();
  CsvWriter summary(files[1], {"metric_name", "t_or_window", "value"});
  summary.field("lambda").field("stationary").field(q.lambda).end_row();
  summary.field("mean").field("stationary").field(q.mean).end_row();
  summary.field("iterations").field("stationary").field(static_cast<std::uint64_t>(q.iterations)).end_row();
  summary.field("weak_residual").field("stationary").field(qsd_residual(*cfg.drift, grid, q)).end_row();
  return files;
}

inline std::vector<fs::path> run_bifurcation(const ExperimentConfig& cfg, const fs::path& out) {
  const auto& b = cfg.bifurcation;
  const auto steps = static_cast<long long>(std::floor((b.gamma_max - b.gamma_min) / b.gamma_step + 1e-9));
  std::vector<fs::path> files{out / "branches.csv"};
  CsvWriter csv(files[0], {"gamma", "root"});
  for (long long k = 0; k <= steps; ++k) {
    const double gamma = b.gamma_min + static_cast<double>(k) * b.gamma_step;
    for (double root : example::bifurcation_roots(gamma)) csv.field(gamma).field(root).end_row();
  }
  return files;
}

inline std::vector<fs::path> run_bessel(const ExperimentConfig& cfg, const fs::path& out, int threads) {
  const auto params = BesselParams::for_domain(*cfg.domain, cfg.drift->bound_B);
  const TailTable tail = simulate_reflected_bessel(params, cfg.bessel.times, cfg.bessel.deltas, cfg.bessel.dt,
                                                   cfg.bessel.paths, cfg.seed, threads);
  std::vector<fs::path> files{out / "tail.csv"};
  CsvWriter csv(files[0], {"t", "delta", "probability", "stderr"});
  for (std::size_t ti = 0; ti < tail.times.size(); ++ti)
    for (std::size_t di = 0; di < tail.deltas.size(); ++di)
      csv.field(tail.times[ti]).field(tail.deltas[di]).field(tail.p(ti, di)).field(tail.se(ti, di)).end_row();
  return files;
}

struct CompareRow {
  std::size_t particles = 0;
  std::uint64_t seed = 0;
  double time = 0.0;
  double w1 = 0.0;
  double jump_particles = 0.0;
  double jump_pde = 0.0;
};

// Particle systems at each N (and `repeats` seeds) against the PDE oracle at one time.
inline std::vector<CompareRow> compare_with_pde(const ExperimentConfig& cfg, int threads) {
  const Grid1D grid = Grid1D::over(*cfg.domain, cfg.pde.grid_nodes);
  const double t = cfg.compare.time;
  const PdeState init = initial_state(grid, initial_density(cfg, grid));
  const PdeSeries pde = evolve_conditional_law(init, *cfg.drift, t, cfg.pde.dt, grid, t);
  const auto law = grid_measure(grid, pde.laws.back());
  const double jump_pde = pde.jump.back();

  std::vector<CompareRow> rows;
  const StepOptions opts{cfg.bridge_correction, threads};
  for (std::size_t n : cfg.compare.particle_counts)
    for (std::size_t r = 0; r < cfg.compare.repeats; ++r) {
      const std::uint64_t seed = cfg.seed + r;
      Ensemble ens = init_ensemble(n, *cfg.domain, cfg.initial, seed);
      const RunResult res = run(ens, *cfg.drift, *cfg.domain, t, *cfg.dt, t, opts);
      const auto last = res.series.size() - 1;
      const double w1 = wasserstein1(MeasureSnapshot::empirical(res.series.snapshot(last), 1), law);
      rows.push_back({n, seed, res.series.times[last], w1, res.series.jump_process(last), jump_pde});
    }
  return rows;
}

inline std::vector<fs::path> run_compare(const ExperimentConfig& cfg, const fs::path& out, int threads) {
  const auto rows = compare_with_pde(cfg, threads);
  std::vector<fs::path> files{out / "w1_vs_N.csv"};
  CsvWriter csv(files[0], {"N", "seed", "t", "w1", "J_particles", "J_pde"});
  for (const auto& r : rows)
    csv.field(static_cast<std::uint64_t>(r.particles)).field(r.seed).field(r.time).field(r.w1).field(r.jump_particles).field(r.jump_pde).end_row();
  return files;
}

struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

// Exit codes: 0 success, 1 configuration error, 2 numerical failure.
inline int run_subcommand(const std::string& name, const std::string& config_path, const Overrides& overrides,
                          std::ostream& err = std::cerr) {
  ExperimentConfig cfg;
  try {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), name) == kSubcommands.end())
      throw ConfigError("unknown subcommand \"" + name + "\"");
    cfg = load_config(config_path, name);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }
  try {
    const fs::path out(cfg.output_dir);
    fs::create_directories(out);
    const int threads = resolve_threads(overrides.threads);
    if (name == "simulate") run_simulate(cfg, out, threads);
    else if (name == "pde") run_pde(cfg, out);
    else if (name == "qsd") run_qsd(cfg, out);
    else if (name == "bifurcation") run_bifurcation(cfg, out);
    else if (name == "bessel") run_bessel(cfg, out, threads);
    else run_compare(cfg, out, threads);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace fvqsd
