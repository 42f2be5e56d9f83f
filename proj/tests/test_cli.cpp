#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string output;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fvqsd_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

Outcome invoke(const std::string& args) {
  const std::string cmd = std::string(FVQSD_CLI_PATH) + " " + args + " 2>&1";
  Outcome out;
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.output.append(buf, n);
  const int status = pclose(pipe);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSimulate = R"({
  "domain": {"kind": "interval", "a": -1.0, "b": 1.0},
  "drift": {"variant": "mean_attraction", "gamma": 1.0},
  "N": 2, "dt": 0.001, "T": 0.01, "seed": 1
})";

TEST(Cli, SimulateSmoke) {
  const auto dir = scratch("smoke");
  const auto cfg = write_config(dir, kSimulate);
  const auto r = invoke("simulate --config " + cfg.string() + " --out " + (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto traj = lines(dir / "out" / "trajectory.csv");
  ASSERT_GE(traj.size(), 3u);
  EXPECT_EQ(traj[0], "t,J,particle_index,x");
  EXPECT_EQ(lines(dir / "out" / "events.csv")[0], "t,dying,death_ordinal,target,landing_x,target_pending");
  EXPECT_EQ(lines(dir / "out" / "estimates.csv")[0], "metric_name,t_or_window,value");
}

TEST(Cli, FloatsRoundTrip) {
  const auto dir = scratch("roundtrip");
  const auto cfg = write_config(dir, kSimulate);
  ASSERT_EQ(invoke("simulate --config " + cfg.string() + " --out " + dir.string()).code, 0);
  const auto traj = lines(dir / "trajectory.csv");
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const std::string x = traj[k].substr(traj[k].rfind(',') + 1);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::strtod(x.c_str(), nullptr));
    EXPECT_EQ(x, buf);
  }
}

TEST(Cli, BifurcationBranches) {
  const auto dir = scratch("bif");
  const auto cfg = write_config(dir, R"({"bifurcation": {"gamma_min": 0, "gamma_max": 10, "gamma_step": 0.1}})");
  ASSERT_EQ(invoke("bifurcation --config " + cfg.string() + " --out " + dir.string()).code, 0);
  const auto rows = lines(dir / "branches.csv");
  ASSERT_EQ(rows[0], "gamma,root");
  std::map<double, int> count;
  for (std::size_t k = 1; k < rows.size(); ++k) ++count[std::stod(rows[k].substr(0, rows[k].find(',')))];
  EXPECT_EQ(count.size(), 101u);
  for (const auto& [g, n] : count) {
    if (g < 5.27) EXPECT_EQ(n, 1) << g;
    if (g > 5.28) EXPECT_EQ(n, 3) << g;
  }
}

TEST(Cli, MissingFieldExitsWithOne) {
  const auto dir = scratch("missing");
  const auto cfg = write_config(dir, R"({"domain": {"kind": "interval", "a": -1, "b": 1},
                                         "drift": {"variant": "zero"}, "dt": 0.01, "T": 1})");
  const auto r = invoke("simulate --config " + cfg.string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("\"N\""), std::string::npos) << r.output;
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(invoke("simulate").code, 1);
  EXPECT_EQ(invoke("").code, 1);
  EXPECT_EQ(invoke("simulate --config /nonexistent.json").code, 1);
  EXPECT_EQ(invoke("teleport --config x.json").code, 1);
  EXPECT_EQ(invoke("--help").code, 0);
}

TEST(Cli, NumericalFailureExitsWithTwo) {
  const auto dir = scratch("numerical");
  const auto cfg = write_config(dir, R"({"domain": {"kind": "interval", "a": -1, "b": 1},
                                         "drift": {"variant": "zero"}, "N": 4, "dt": 50.0, "T": 50.0})");
  const auto r = invoke("simulate --config " + cfg.string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("too coarse"), std::string::npos);

  const auto cfg2 = write_config(dir, R"({"domain": {"kind": "interval", "a": -1, "b": 1},
                                          "drift": {"variant": "zero"}, "T": 2000.0,
                                          "pde": {"M": 16, "dt": 0.5, "output_every": 100}})");
  EXPECT_EQ(invoke("pde --config " + cfg2.string() + " --out " + dir.string()).code, 2);
}

TEST(Cli, OutputsAreIdenticalAcrossRunsAndThreadCounts) {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, R"({
    "domain": {"kind": "interval", "a": -1.0, "b": 1.0},
    "drift": {"variant": "kernel_field", "strength": 2.0, "bandwidth": 0.3},
    "N": 64, "dt": 0.001, "T": 0.5, "snapshot_every": 0.01, "seed": 77,
    "bessel": {"times": [0.5], "deltas": [0.1], "dt": 0.001, "paths": 500}
  })");
  for (const char* sub : {"simulate", "bessel"}) {
    std::map<std::string, std::string> first;
    for (const std::string threads : {"1", "1", "3"}) {
      const auto out = dir / (std::string(sub) + threads);
      fs::remove_all(out);
      ASSERT_EQ(invoke(std::string(sub) + " --config " + cfg.string() + " --threads " + threads + " --out " + out.string()).code, 0);
      for (const auto& f : fs::directory_iterator(out)) {
        const auto name = f.path().filename().string();
        if (first.count(name)) EXPECT_EQ(first[name], slurp(f.path())) << sub << " " << name;
        else first[name] = slurp(f.path());
      }
    }
    EXPECT_FALSE(first.empty());
  }
}

TEST(Cli, SeedOverrideChangesOutput) {
  const auto dir = scratch("seed");
  const auto cfg = write_config(dir, kSimulate);
  ASSERT_EQ(invoke("simulate --config " + cfg.string() + " --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(invoke("simulate --seed 2 --config " + cfg.string() + " --out " + (dir / "b").string()).code, 0);
  EXPECT_NE(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "b" / "trajectory.csv"));
}

TEST(Cli, PdeQsdBesselCompare) {
  const auto dir = scratch("others");
  const auto cfg = write_config(dir, R"({
    "domain": {"kind": "interval", "a": -1.0, "b": 1.0},
    "drift": {"variant": "mean_attraction", "gamma": 1.0},
    "initial": {"kind": "cosine", "tilt": 1.0},
    "dt": 0.001, "T": 0.2, "seed": 5,
    "pde": {"M": 99, "dt": 0.0005, "output_every": 0.1},
    "bessel": {"times": [0.1, 0.2], "deltas": [0.05, 0.1], "dt": 0.001, "paths": 200},
    "compare": {"N_values": [10, 20], "repeats": 2, "t": 0.2}
  })");
  const std::map<std::string, std::pair<std::string, std::string>> expect{
      {"pde", {"pde_J.csv", "t,J"}},
      {"qsd", {"qsd.csv", "x,density"}},
      {"bessel", {"tail.csv", "t,delta,probability,stderr"}},
      {"compare", {"w1_vs_N.csv", "N,seed,t,w1,J_particles,J_pde"}}};
  for (const auto& [sub, file] : expect) {
    const auto out = dir / sub;
    const auto r = invoke(sub + " --config " + cfg.string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << sub << ": " << r.output;
    const auto rows = lines(out / file.first);
    ASSERT_GE(rows.size(), 2u) << sub;
    EXPECT_EQ(rows[0], file.second);
  }
  EXPECT_EQ(lines(dir / "compare" / "w1_vs_N.csv").size(), 5u);
  EXPECT_EQ(lines(dir / "pde" / "pde_law.csv")[0], "t,x,density");
}

}  // namespace
