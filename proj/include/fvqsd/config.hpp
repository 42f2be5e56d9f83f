#pragma once

// JSON experiment configuration. One document per experiment; each subcommand
// declares which fields it requires and the whole document is validated before
// anything runs.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fvqsd/drift.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/geometry.hpp"
#include "fvqsd/initial_law.hpp"

namespace fvqsd {

struct EstimatorSettings {
  std::size_t bins = 64;
  double burn_in = 0.0;
  double spacing = 0.05;
  std::vector<double> boundary_deltas{0.02, 0.05, 0.1};
};

struct PdeSettings {
  std::size_t grid_nodes = 1000;
  double dt = 1e-5;
  double output_every = 0.05;
};

struct QsdSettings {
  double tol = 1e-10;
  double guess_tilt = 0.0;  // initial guess proportional to e^{tilt x} cos(...)
};

struct BifurcationSettings {
  double gamma_min = 0.0;
  double gamma_max = 10.0;
  double gamma_step = 0.1;
};

struct BesselSettings {
  std::vector<double> times{0.25, 0.5, 1.0};
  std::vector<double> deltas{0.02, 0.05, 0.1};
  double dt = 1e-4;
  std::size_t paths = 10000;
};

struct CompareSettings {
  std::vector<std::size_t> particle_counts{100, 400, 1600};
  std::size_t repeats = 5;
  double time = 1.0;
};

struct ExperimentConfig {
  std::optional<Domain> domain;
  std::optional<DriftSpec> drift;
  std::optional<std::size_t> particles;  // N
  std::optional<double> dt;
  std::optional<double> horizon;  // T
  std::optional<double> snapshot_every;
  std::uint64_t seed = 0;
  InitialLaw initial;
  std::vector<double> explicit_positions;
  bool bridge_correction = false;
  EstimatorSettings estimators;
  PdeSettings pde;
  QsdSettings qsd;
  BifurcationSettings bifurcation;
  BesselSettings bessel;
  CompareSettings compare;
  std::string output_dir = "out";

  double snapshot_interval() const { return snapshot_every.value_or(*dt); }
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& msg) { throw ConfigError(msg); }

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    config_fail("missing required field \"" + (where.empty() ? key : where + "." + key) + "\"");
  return obj.at(key);
}

template <class T>
T get_as(const json& value, const std::string& name) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    config_fail("field \"" + name + "\" has the wrong type");
  }
}

inline double number(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) config_fail("field \"" + where + "." + key + "\" must be a number");
  return v.get<double>();
}

inline std::vector<double> number_list(const json& v, const std::string& name) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) config_fail("field \"" + name + "\" must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) config_fail("field \"" + name + "\" must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline Domain parse_domain(const json& j) {
  const std::string kind = get_as<std::string>(require(j, "kind", "domain"), "domain.kind");
  try {
    if (kind == "interval") return Domain::interval(number(j, "a", "domain"), number(j, "b", "domain"));
    if (kind == "box")
      return Domain::box(number_list(require(j, "lo", "domain"), "domain.lo"),
                         number_list(require(j, "hi", "domain"), "domain.hi"));
    if (kind == "ball")
      return Domain::ball(number_list(require(j, "center", "domain"), "domain.center"),
                          number(j, "radius", "domain"));
  } catch (const std::invalid_argument& e) {
    config_fail(std::string("invalid domain: ") + e.what());
  }
  config_fail("unknown domain kind \"" + kind + "\" (expected interval, box or ball)");
}

inline DriftSpec parse_drift(const json& j, const Domain& domain) {
  const std::string variant = get_as<std::string>(require(j, "variant", "drift"), "drift.variant");
  DriftSpec d;
  try {
    if (variant == "zero")
      d = DriftSpec::zero();
    else if (variant == "mean_attraction")
      d = DriftSpec::mean_attraction(number(j, "gamma", "drift"), domain);
    else if (variant == "clamped_linear")
      d = DriftSpec::clamped_linear(number(j, "gamma", "drift"), number(j, "clamp", "drift"), domain);
    else if (variant == "kernel_field")
      d = DriftSpec::kernel_field(number(j, "strength", "drift"), number(j, "bandwidth", "drift"), domain);
    else
      config_fail("unknown drift variant \"" + variant +
                  "\" (expected zero, mean_attraction, clamped_linear or kernel_field)");
  } catch (const std::invalid_argument& e) {
    config_fail(std::string("invalid drift: ") + e.what());
  }
  if (j.contains("bound")) {
    d.bound_B = number(j, "bound", "drift");
    if (d.bound_B < 0.0) config_fail("field \"drift.bound\" must be nonnegative");
  }
  return d;
}

inline InitialLaw parse_initial(const json& j, ExperimentConfig& cfg) {
  const std::string kind = get_as<std::string>(require(j, "kind", "initial"), "initial.kind");
  if (kind == "uniform") return InitialLaw::uniform();
  if (kind == "cosine") return InitialLaw::cosine(j.contains("tilt") ? number(j, "tilt", "initial") : 0.0);
  if (kind == "point") return InitialLaw::at(number_list(require(j, "x", "initial"), "initial.x"));
  if (kind == "explicit") {
    cfg.explicit_positions = number_list(require(j, "positions", "initial"), "initial.positions");
    return InitialLaw::uniform();
  }
  config_fail("unknown initial kind \"" + kind + "\" (expected uniform, cosine, point or explicit)");
}

inline std::size_t count_field(const json& v, const std::string& name) {
  if (!v.is_number_integer() || v.get<long long>() < 0) config_fail("field \"" + name + "\" must be a nonnegative integer");
  return v.get<std::size_t>();
}

}  // namespace detail

// Fields each subcommand needs before it can run.
inline std::set<std::string> required_fields(const std::string& subcommand) {
  if (subcommand == "simulate") return {"domain", "drift", "N", "dt", "T"};
  if (subcommand == "pde") return {"domain", "drift", "T"};
  if (subcommand == "qsd") return {"domain", "drift"};
  if (subcommand == "bifurcation") return {};
  if (subcommand == "bessel") return {"domain", "drift"};
  if (subcommand == "compare") return {"domain", "drift", "dt"};
  throw ConfigError("unknown subcommand \"" + subcommand + "\"");
}

inline ExperimentConfig parse_config(const nlohmann::json& j, const std::string& subcommand) {
  using detail::config_fail;
  using detail::number;
  if (!j.is_object()) config_fail("configuration must be a JSON object");
  for (const auto& field : required_fields(subcommand)) detail::require(j, field, "");

  ExperimentConfig cfg;
  if (j.contains("domain")) cfg.domain = detail::parse_domain(j.at("domain"));
  if (j.contains("drift")) {
    if (!cfg.domain) config_fail("field \"drift\" needs a \"domain\" to set its bound");
    cfg.drift = detail::parse_drift(j.at("drift"), *cfg.domain);
  }
  if (j.contains("N")) cfg.particles = detail::count_field(j.at("N"), "N");
  if (j.contains("dt")) cfg.dt = number(j, "dt", "");
  if (j.contains("T")) cfg.horizon = number(j, "T", "");
  if (j.contains("snapshot_every")) cfg.snapshot_every = number(j, "snapshot_every", "");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) config_fail("field \"seed\" must be an integer");
    cfg.seed = j.at("seed").is_number_unsigned() ? j.at("seed").get<std::uint64_t>()
                                                 : static_cast<std::uint64_t>(j.at("seed").get<std::int64_t>());
  }
  if (j.contains("initial")) cfg.initial = detail::parse_initial(j.at("initial"), cfg);
  if (j.contains("bridge_correction")) cfg.bridge_correction = detail::get_as<bool>(j.at("bridge_correction"), "bridge_correction");
  if (j.contains("output_dir")) cfg.output_dir = detail::get_as<std::string>(j.at("output_dir"), "output_dir");

  if (j.contains("estimators")) {
    const auto& e = j.at("estimators");
    if (e.contains("bins")) cfg.estimators.bins = detail::count_field(e.at("bins"), "estimators.bins");
    if (e.contains("burn_in")) cfg.estimators.burn_in = number(e, "burn_in", "estimators");
    if (e.contains("spacing")) cfg.estimators.spacing = number(e, "spacing", "estimators");
    if (e.contains("boundary_deltas"))
      cfg.estimators.boundary_deltas = detail::number_list(e.at("boundary_deltas"), "estimators.boundary_deltas");
  }
  if (j.contains("pde")) {
    const auto& p = j.at("pde");
    if (p.contains("M")) cfg.pde.grid_nodes = detail::count_field(p.at("M"), "pde.M");
    if (p.contains("dt")) cfg.pde.dt = number(p, "dt", "pde");
    if (p.contains("output_every")) cfg.pde.output_every = number(p, "output_every", "pde");
  }
  if (j.contains("qsd")) {
    const auto& q = j.at("qsd");
    if (q.contains("tol")) cfg.qsd.tol = number(q, "tol", "qsd");
    if (q.contains("guess_tilt")) cfg.qsd.guess_tilt = number(q, "guess_tilt", "qsd");
  }
  if (j.contains("bifurcation")) {
    const auto& b = j.at("bifurcation");
    if (b.contains("gamma_min")) cfg.bifurcation.gamma_min = number(b, "gamma_min", "bifurcation");
    if (b.contains("gamma_max")) cfg.bifurcation.gamma_max = number(b, "gamma_max", "bifurcation");
    if (b.contains("gamma_step")) cfg.bifurcation.gamma_step = number(b, "gamma_step", "bifurcation");
  }
  if (j.contains("bessel")) {
    const auto& b = j.at("bessel");
    if (b.contains("times")) cfg.bessel.times = detail::number_list(b.at("times"), "bessel.times");
    if (b.contains("deltas")) cfg.bessel.deltas = detail::number_list(b.at("deltas"), "bessel.deltas");
    if (b.contains("dt")) cfg.bessel.dt = number(b, "dt", "bessel");
    if (b.contains("paths")) cfg.bessel.paths = detail::count_field(b.at("paths"), "bessel.paths");
  }
  if (j.contains("compare")) {
    const auto& c = j.at("compare");
    if (c.contains("N_values")) {
      cfg.compare.particle_counts.clear();
      if (!c.at("N_values").is_array()) config_fail("field \"compare.N_values\" must be an array");
      for (const auto& v : c.at("N_values")) cfg.compare.particle_counts.push_back(detail::count_field(v, "compare.N_values"));
    }
    if (c.contains("repeats")) cfg.compare.repeats = detail::count_field(c.at("repeats"), "compare.repeats");
    if (c.contains("t")) cfg.compare.time = number(c, "t", "compare");
  }
  return cfg;
}

// Checks value ranges for the given subcommand.
inline void validate(const ExperimentConfig& cfg, const std::string& subcommand) {
  using detail::config_fail;
  const bool particles = subcommand == "simulate" || subcommand == "compare";
  const bool grid = subcommand == "pde" || subcommand == "qsd" || subcommand == "compare";
  if (cfg.dt && !(*cfg.dt > 0.0)) config_fail("field \"dt\" must be positive");
  if (cfg.horizon && !(*cfg.horizon > 0.0)) config_fail("field \"T\" must be positive");
  if (particles) {
    if (subcommand == "simulate" && *cfg.particles < 2) config_fail("field \"N\" must be at least 2");
    if (cfg.snapshot_every && *cfg.snapshot_every < *cfg.dt * (1.0 - 1e-9))
      config_fail("field \"snapshot_every\" must be at least dt");
    if (!cfg.explicit_positions.empty()) {
      if (subcommand != "simulate") config_fail("explicit initial positions are only supported by simulate");
      if (cfg.explicit_positions.size() != *cfg.particles * cfg.domain->dimension())
        config_fail("field \"initial.positions\" must hold N * dimension coordinates");
      for (std::size_t i = 0; i < *cfg.particles; ++i)
        if (!cfg.domain->contains(std::span<const double>(cfg.explicit_positions).subspan(i * cfg.domain->dimension(),
                                                                                          cfg.domain->dimension())))
          config_fail("field \"initial.positions\": particle " + std::to_string(i) + " lies outside the domain");
    }
    if (cfg.initial.kind == InitialLaw::Kind::point) {
      if (cfg.initial.location.size() != cfg.domain->dimension() || !cfg.domain->contains(cfg.initial.location))
        config_fail("field \"initial.x\" must be a point inside the domain");
    }
    if (cfg.initial.kind == InitialLaw::Kind::cosine && cfg.domain->dimension() != 1)
      config_fail("field \"initial\": cosine laws need an interval domain");
    if (cfg.estimators.bins == 0) config_fail("field \"estimators.bins\" must be positive");
    if (!(cfg.estimators.spacing > 0.0)) config_fail("field \"estimators.spacing\" must be positive");
  }
  if (grid) {
    if (cfg.domain->dimension() != 1) config_fail("the PDE oracle needs an interval domain");
    if (cfg.pde.grid_nodes < 16) config_fail("field \"pde.M\" must be at least 16");
    if (!(cfg.pde.dt > 0.0)) config_fail("field \"pde.dt\" must be positive");
    if (!(cfg.pde.output_every > 0.0)) config_fail("field \"pde.output_every\" must be positive");
    if (subcommand != "qsd" && cfg.initial.kind == InitialLaw::Kind::point)
      config_fail("field \"initial\": the PDE oracle needs an initial law with a density");
    if (subcommand != "qsd" && !cfg.explicit_positions.empty())
      config_fail("field \"initial\": the PDE oracle needs an initial law with a density");
    if (!(cfg.qsd.tol > 0.0)) config_fail("field \"qsd.tol\" must be positive");
  }
  if (subcommand == "compare") {
    if (cfg.compare.particle_counts.empty()) config_fail("field \"compare.N_values\" must be nonempty");
    for (auto n : cfg.compare.particle_counts)
      if (n < 2) config_fail("field \"compare.N_values\" entries must be at least 2");
    if (cfg.compare.repeats == 0) config_fail("field \"compare.repeats\" must be positive");
    if (!(cfg.compare.time > 0.0)) config_fail("field \"compare.t\" must be positive");
  }
  if (subcommand == "bifurcation") {
    const auto& b = cfg.bifurcation;
    if (b.gamma_min < 0.0 || !(b.gamma_max >= b.gamma_min) || !(b.gamma_step > 0.0))
      config_fail("bifurcation needs 0 <= gamma_min <= gamma_max and gamma_step > 0");
  }
  if (subcommand == "bessel") {
    const double r = cfg.domain->interior_ball_radius();
    if (!(cfg.bessel.dt > 0.0) || cfg.bessel.dt > r * r / 100.0) config_fail("field \"bessel.dt\" must lie in (0, r^2/100]");
    if (cfg.bessel.paths == 0) config_fail("field \"bessel.paths\" must be positive");
    if (cfg.bessel.times.empty() || cfg.bessel.deltas.empty()) config_fail("bessel needs nonempty times and deltas");
    for (double t : cfg.bessel.times)
      if (t < 0.0) config_fail("field \"bessel.times\" must be nonnegative");
    for (double d : cfg.bessel.deltas)
      if (!(d > 0.0) || d > r) config_fail("field \"bessel.deltas\" entries must lie in (0, r]");
  }
}

inline ExperimentConfig load_config(const std::string& path, const std::string& subcommand) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg = parse_config(j, subcommand);
  validate(cfg, subcommand);
  return cfg;
}

}  // namespace fvqsd
