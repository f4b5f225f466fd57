// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chainflux/config.hpp>
#include <chainflux/csv.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace chainflux;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path sandbox() {
  static const fs::path base = [] {
    fs::path p = fs::temp_directory_path() / "chainflux_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return base;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  REQUIRE(out.good());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Runs the installed binary and returns its exit code; stdout/stderr
// land next to the artifacts for inspection.
int run_cli(const std::string& args, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string cmd = std::string(CHAINFLUX_CLI_PATH) + " " + args +
                          " > " + (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parse, serialize, and reparse is the identity") {
  const std::string text =
      "# run parameters\n"
      "chain.n = 64   # sites\n"
      "\n"
      "noise.gamma=1.5\n"
      "  bath.t_left =  1.25\n"
      "tag.note = steady-run\n";
  const Config cfg = Config::parse(text);
  CHECK(cfg.entries().size() == 4);
  CHECK(cfg.get_int("chain.n") == 64);
  CHECK(cfg.get_double("noise.gamma") == 1.5);
  CHECK(cfg.get_double("bath.t_left") == 1.25);
  CHECK(cfg.get_string("tag.note") == "steady-run");

  const std::string canon = cfg.serialize();
  const Config again = Config::parse(canon);
  CHECK(again.entries() == cfg.entries());
  CHECK(again.serialize() == canon);
}

TEST_CASE("config rejects malformed text and bad field values") {
  using doctest::Contains;
  CHECK_THROWS_WITH_AS(Config::parse("chain.n 64\n"),
                       Contains("ConfigInvalid"), std::runtime_error);
  CHECK_THROWS_WITH_AS(Config::parse("= 3\n"), Contains("empty key"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(Config::parse("chain.n =\n"), Contains("empty value"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(Config::parse("a = 1\na = 2\n"),
                       Contains("duplicate key 'a'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(Config::parse("ch ain = 1\n"),
                       Contains("unsupported characters"),
                       std::runtime_error);

  const Config cfg = Config::parse("x = fast\nn = -3\nv = 1.5\n");
  CHECK_THROWS_WITH_AS(cfg.get_double("x"), Contains("field 'x'"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(cfg.get_int("v"), Contains("an integer"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(cfg.get_u64("n", 0), Contains("nonnegative"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(cfg.get_string("missing"), Contains("required"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(cfg.require_known({"x", "n"}),
                       Contains("'v' is not recognized"), std::runtime_error);
  CHECK_NOTHROW(cfg.require_known({"x", "n", "v"}));

  const Config lists = Config::parse("a = 1, 2.5 ,3\n");
  const std::vector<double> vals = lists.get_double_list("a");
  REQUIRE(vals.size() == 3);
  CHECK(vals[1] == 2.5);
}

TEST_CASE("csv cells round-trip doubles exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, -7.25}) {
    const std::string cell = csv_cell(v);
    CHECK(std::strtod(cell.c_str(), nullptr) == v);
  }
  CHECK(csv_cell(0.1) == "0.1");
  CHECK(csv_cell(static_cast<std::int64_t>(-12)) == "-12");

  const fs::path dir = sandbox() / "csv";
  fs::create_directories(dir);
  write_csv(dir / "t.csv", {"a", "b"}, {{"1", "2"}, {"3", "4"}});
  CHECK(read_file(dir / "t.csv") == "a,b\n1,2\n3,4\n");
  CHECK(!fs::exists(dir / "t.csv.tmp"));
  CHECK_THROWS_AS(write_csv(dir / "u.csv", {"a", "b"}, {{"1"}}),
                  std::runtime_error);
}

TEST_CASE("same config and seed produce byte-identical artifacts") {
  const fs::path dir = sandbox() / "determinism";
  fs::create_directories(dir);
  write_file(dir / "sim.cfg",
             "experiment = simulate\n"
             "chain.family = eta\n"
             "chain.n = 16\n"
             "potential.family = exponential\n"
             "noise.kind = volume\n"
             "noise.gamma = 1.0\n"
             "sim.dt = 0.01\n"
             "sim.horizon = 2.0\n"
             "sim.snapshots = 8\n");
  const std::string base = " --config " + (dir / "sim.cfg").string() +
                           " --seed 7 --out ";
  CHECK(run_cli("simulate" + base + (dir / "a").string(), dir / "a") == 0);
  CHECK(run_cli("simulate" + base + (dir / "b").string(), dir / "b") == 0);
  const std::string ta = read_file(dir / "a" / "trajectory.csv");
  CHECK(ta == read_file(dir / "b" / "trajectory.csv"));
  CHECK(read_file(dir / "a" / "profile.csv") ==
        read_file(dir / "b" / "profile.csv"));
  CHECK(ta.rfind("time,total_energy,total_momentum,total_volume\n", 0) == 0);

  // A different seed must change the trajectory.
  CHECK(run_cli("simulate --config " + (dir / "sim.cfg").string() +
                    " --seed 8 --out " + (dir / "c").string(),
                dir / "c") == 0);
  CHECK(ta != read_file(dir / "c" / "trajectory.csv"));
}

TEST_CASE("invalid configurations exit with code 2") {
  const fs::path dir = sandbox() / "invalid";
  fs::create_directories(dir);

  write_file(dir / "unknown.cfg",
             "experiment = kernel\nkernel.t = 1\ngrid.halfwdith = 6000\n");
  CHECK(run_cli("kernel --config " + (dir / "unknown.cfg").string() +
                    " --out " + (dir / "o1").string(),
                dir / "o1") == 2);

  // A two-site scan has no interior site, so the precondition fails.
  write_file(dir / "short.cfg",
             "experiment = ness-scan\nscan.n_list = 2\n");
  CHECK(run_cli("ness-scan --config " + (dir / "short.cfg").string() +
                    " --out " + (dir / "o2").string(),
                dir / "o2") == 2);

  write_file(dir / "mismatch.cfg", "experiment = kernel\nkernel.t = 1\n");
  CHECK(run_cli("simulate --config " + (dir / "mismatch.cfg").string() +
                    " --out " + (dir / "o3").string(),
                dir / "o3") == 2);

  CHECK(run_cli("kernel --config " + (dir / "does_not_exist.cfg").string() +
                    " --out " + (dir / "o4").string(),
                dir / "o4") == 2);

  // Unknown flags and missing required options are usage errors.
  CHECK(run_cli("kernel --confg x", dir / "o5") == 2);
}

TEST_CASE("numeric failures exit with code 3") {
  const fs::path dir = sandbox() / "numeric";
  fs::create_directories(dir);
  // The window is far too narrow for the heavy left tail at t = 1.
  write_file(dir / "narrow.cfg",
             "experiment = kernel\nkernel.t = 1\ngrid.halfwidth = 500\n"
             "grid.points = 8192\n");
  CHECK(run_cli("kernel --config " + (dir / "narrow.cfg").string() +
                    " --out " + (dir / "o").string(),
                dir / "o") == 3);
  const std::string err = read_file(dir / "o" / "stderr.txt");
  CHECK(err.find("TruncationError") != std::string::npos);
}

TEST_CASE("exact solver run reproduces the known drift velocity") {
  const fs::path dir = sandbox() / "drift";
  fs::create_directories(dir);
  write_file(dir / "exact.cfg",
             "experiment = exact-ness\n"
             "chain.n = 4\n"
             "noise.gamma = 1.0\n"
             "bath.coupling_left = 1.0\n"
             "bath.coupling_right = 1.0\n"
             "bath.t_left = 1.0\n"
             "bath.t_right = 1.0\n"
             "bath.tau_left = 0.0\n"
             "bath.tau_right = 1.0\n");
  REQUIRE(run_cli("exact-ness --config " + (dir / "exact.cfg").string() +
                      " --out " + (dir / "o").string(),
                  dir / "o") == 0);
  const json summary = json::parse(read_file(dir / "o" / "summary.json"));
  // (tau_r - tau_l) / (gamma (n-2) + gamma_l + gamma_r) = 1/4.
  CHECK(std::abs(summary["p_s"].get<double>() - 0.25) < 1e-12);
  CHECK(summary["p_s_check"] == "pass");
  CHECK(summary["rng"] == "philox4x32-10/v1");

  // Every momentum site carries the common drift.
  std::istringstream momenta(read_file(dir / "o" / "momenta.csv"));
  std::string line;
  std::getline(momenta, line);
  CHECK(line == "site,mean_momentum");
  int sites = 0;
  while (std::getline(momenta, line)) {
    CHECK(line.substr(line.find(',') + 1) == "0.25");
    ++sites;
  }
  CHECK(sites == 4);
}

TEST_CASE("sweeps expand axes with distinct derived seeds") {
  const fs::path dir = sandbox() / "sweep";
  fs::create_directories(dir);
  write_file(dir / "tmpl.cfg",
             "experiment = exact-ness\n"
             "chain.n = 8\n"
             "sweep.noise.gamma = 0.5, 2.0\n"
             "sweep.bath.tau_right = 0.0, 1.0\n");
  REQUIRE(run_cli("sweep --config " + (dir / "tmpl.cfg").string() +
                      " --seed 99 --out " + (dir / "o").string(),
                  dir / "o") == 0);

  std::istringstream merged(read_file(dir / "o" / "merged.csv"));
  std::string line;
  std::getline(merged, line);
  CHECK(line.rfind("point,run_id,seed,status,bath.tau_right,noise.gamma",
                   0) == 0);
  std::set<std::string> seeds, ids;
  int rows = 0, ok = 0;
  while (std::getline(merged, line)) {
    std::istringstream cells(line);
    std::string point, id, seed, status;
    std::getline(cells, point, ',');
    std::getline(cells, id, ',');
    std::getline(cells, seed, ',');
    std::getline(cells, status, ',');
    ids.insert(id);
    seeds.insert(seed);
    ok += status == "ok";
    ++rows;
    CHECK(fs::exists(dir / "o" / id / "summary.json"));
  }
  CHECK(rows == 4);
  CHECK(ok == 4);
  CHECK(ids.size() == 4);
  CHECK(seeds.size() == 4);

  // Re-running the identical sweep is reproducible byte for byte.
  REQUIRE(run_cli("sweep --config " + (dir / "tmpl.cfg").string() +
                      " --seed 99 --out " + (dir / "p").string(),
                  dir / "p") == 0);
  CHECK(read_file(dir / "o" / "merged.csv") ==
        read_file(dir / "p" / "merged.csv"));

  // A failing point surfaces as a partial failure with exit code 3
  // while healthy points still complete.
  write_file(dir / "bad.cfg",
             "experiment = exact-ness\n"
             "chain.n = 8\n"
             "sweep.noise.gamma = 1.0, -2.0\n");
  CHECK(run_cli("sweep --config " + (dir / "bad.cfg").string() +
                    " --seed 5 --out " + (dir / "q").string(),
                dir / "q") == 3);
  CHECK(read_file(dir / "q" / "stderr.txt").find("PartialFailure") !=
        std::string::npos);
  const std::string table = read_file(dir / "q" / "merged.csv");
  CHECK(table.find("ok") != std::string::npos);
  CHECK(table.find("failed") != std::string::npos);
}

TEST_CASE("replica count flows from flag and config") {
  const fs::path dir = sandbox() / "replicas";
  fs::create_directories(dir);
  write_file(dir / "g.cfg",
             "experiment = gibbs-sample\n"
             "potential.family = exponential\n"
             "state.beta = 2.0\n"
             "state.lambda = 0.5\n"
             "chain.n = 256\n"
             "run.replicas = 2\n");
  REQUIRE(run_cli("gibbs-sample --config " + (dir / "g.cfg").string() +
                      " --out " + (dir / "o").string(),
                  dir / "o") == 0);
  std::istringstream two(read_file(dir / "o" / "samples.csv"));
  std::string line;
  int rows = -1;  // header
  while (std::getline(two, line)) ++rows;
  CHECK(rows == 2);

  REQUIRE(run_cli("gibbs-sample --config " + (dir / "g.cfg").string() +
                      " --replicas 5 --out " + (dir / "p").string(),
                  dir / "p") == 0);
  std::istringstream five(read_file(dir / "p" / "samples.csv"));
  rows = -1;
  while (std::getline(five, line)) ++rows;
  CHECK(rows == 5);

  // The sampled moments sit near the exact thermodynamic values.
  const json summary = json::parse(read_file(dir / "p" / "summary.json"));
  const double mean = summary["mean_stretch"].get<double>();
  const double exact = summary["exact_stretch"].get<double>();
  CHECK(std::abs(mean - exact) < 0.1);
}
