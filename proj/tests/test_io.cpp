#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "toric/cli.hpp"
#include "toric/driver.hpp"
#include "toric/error.hpp"
#include "toric/io.hpp"

using namespace toric;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.sim.N_samples = 16;
  c.sim.N_thermalization = 50;
  c.sim.N_between_samples = 2;
  c.sim.N_resamples = 10;
  c.sim.seed = 7;
  c.sim.observables = {"energy"};
  c.params.h = 0.2;
  c.params.lmbda = 0.2;
  c.lat.system_size = 2;
  c.lat.beta = 1.0;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("toric_io_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "paratoric");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("results document layout") {
  RunConfig c = small_config();
  RunResult r = run_sample(c);
  auto doc = results_document(c, RunMode::sample, r);
  const auto& e = doc["simulation"]["results"]["energy"];
  for (const char* k : {"mean", "mean_error", "binder", "binder_error", "autocorrelation_time"})
    CHECK(e.contains(k));
  CHECK_FALSE(e.contains("series"));
  CHECK_FALSE(doc["simulation"]["results"].contains("acc_ratio"));
  const auto& meta = doc["simulation"]["metadata"];
  CHECK(meta["seed_used"] == 7);
  CHECK(meta["mode"] == "sample");
  CHECK(meta.contains("code_version"));

  RunResult t = run_thermalization(c);
  auto tdoc = results_document(c, RunMode::thermalization, t);
  CHECK(tdoc["simulation"]["results"]["acc_ratio"].size() == 50);

  c.out.full_time_series = true;
  auto sdoc = results_document(c, RunMode::sample, r);
  CHECK(sdoc["simulation"]["results"]["energy"]["series"].size() == 16);
}

TEST_CASE("results round trip through a file") {
  RunConfig c = small_config();
  c.sim.observables = {"energy", "plaquette_z"};
  c.params.J = 0.0;  // plaquette_z missing
  RunResult r = run_sample(c);
  auto dir = scratch_dir("roundtrip");
  const std::string path = (dir / "nested" / "results.json").string();
  write_results(results_document(c, RunMode::sample, r), path);
  CHECK_FALSE(fs::exists(path + ".tmp"));
  auto back = read_results(path);
  CHECK(json_number(back["simulation"]["results"]["energy"]["mean"]) == r.at("energy").mean);
  CHECK(back["simulation"]["results"]["plaquette_z"]["mean"].is_null());
  CHECK(std::isnan(json_number(back["simulation"]["results"]["plaquette_z"]["mean"])));
  CHECK_THROWS_AS(read_results((dir / "missing.json").string()), IoError);
}

TEST_CASE("hysteresis document holds one entry per step") {
  RunConfig c = small_config();
  c.params.h_hys = {0.1, 0.2, 0.3};
  c.params.lmbda_hys = {0.2, 0.2, 0.2};
  auto steps = run_hysteresis(c);
  auto doc = hysteresis_document(c, steps);
  CHECK(doc["simulation"]["results"]["energy"]["mean"].size() == 3);
}

TEST_CASE("snapshot GraphML") {
  Lattice lat = build_lattice(LatticeType::square, 2, Boundaries::periodic);
  std::vector<Snapshot> snaps(3, Snapshot(8, 1));
  snaps[1][2] = -1;
  snaps[2][7] = -1;
  SnapshotMetadata meta{Basis::z, 2.5, Couplings{1.0, 0.2, 1.0, 0.1}};
  auto parsed = parse_snapshots(snapshots_graphml(snaps, lat, meta));
  CHECK(parsed.node_ids.size() == 4);
  CHECK(parsed.edges.size() == 8);
  CHECK(parsed.snapshots == snaps);
  CHECK(parsed.graph_attributes.at("basis") == "z");
  CHECK(std::stod(parsed.graph_attributes.at("beta")) == 2.5);
  CHECK(parsed.graph_attributes.at("N_samples") == "3");

  std::vector<Snapshot> ones(3, Snapshot(8, 1));
  const std::string xml = snapshots_graphml(ones, lat, meta);
  CHECK(xml.find("1 1 1") != std::string::npos);

  auto dir = scratch_dir("graphml");
  CHECK_FALSE(write_snapshots({}, lat, meta, (dir / "none.graphml").string()));
  CHECK_FALSE(fs::exists(dir / "none.graphml"));
  REQUIRE(write_snapshots(snaps, lat, meta, (dir / "s.graphml").string()));
  CHECK(read_snapshots((dir / "s.graphml").string()).snapshots == snaps);
  CHECK_THROWS_AS(parse_snapshots("<graphml><broken"), IoError);
}

TEST_CASE("series CSV") {
  RunConfig c = small_config();
  c.sim.observables = {"energy", "anyon_count"};
  RunResult r = run_sample(c);
  const std::string csv = series_csv(r);
  CHECK(csv.rfind("energy,anyon_count", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}

TEST_CASE("command line parsing") {
  SUBCASE("documented sample line") {
    auto o = parse_cli({"-sim", "etc_sample", "-Ns", "2000", "-Nth", "5000", "-Nbs", "10", "-Nr",
                        "1000", "-bet", "16.0", "-muc", "1", "-Jc", "1", "-hc", "0.2", "-lmbdac",
                        "0.0", "-obs", "energy", "plaquette_z", "anyon_count", "-bas", "z", "-lat",
                        "square", "-L", "16", "-bound", "periodic", "-dsp", "1", "-outdir",
                        "./runs/sample", "-snap=0", "-fcs=1"});
    CHECK(o.mode == CliMode::sample);
    CHECK(o.cfg.sim.N_samples == 2000);
    CHECK(o.cfg.sim.N_thermalization == 5000);
    CHECK(o.cfg.lat.beta == 16.0);
    CHECK(o.cfg.params.h == 0.2);
    CHECK(o.cfg.lat.basis == Basis::z);
    CHECK(o.cfg.lat.lattice_type == LatticeType::square);
    CHECK(o.cfg.lat.system_size == 16);
    CHECK(o.cfg.sim.observables.size() == 3);
    CHECK_FALSE(o.cfg.out.save_snapshots);
    CHECK(o.cfg.out.full_time_series);
    CHECK(o.output_directory == "./runs/sample");
  }
  SUBCASE("both snapshot flag forms") {
    CHECK(parse_cli({"-sim", "etc_sample", "-snap", "1"}).cfg.out.save_snapshots);
    CHECK(parse_cli({"-sim", "etc_sample", "-snap=1"}).cfg.out.save_snapshots);
    CHECK_FALSE(parse_cli({"-sim", "etc_sample", "-snap", "0"}).cfg.out.save_snapshots);
  }
  SUBCASE("negative numbers are values") {
    auto o = parse_cli({"-sim", "etc_sample", "-hc", "-0.5", "-dsp", "-1"});
    CHECK(o.cfg.params.h == -0.5);
    CHECK(o.cfg.lat.default_spin == -1);
  }
  SUBCASE("temperature") {
    CHECK(parse_cli({"-sim", "etc_sample", "-T", "0.25"}).cfg.lat.beta == 4.0);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_sample", "-T", "0.25", "-bet", "2"}), UsageError);
  }
  SUBCASE("hysteresis lengths must match") {
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_hysteresis", "-hhys", "0.1", "0.2", "-lmbdahys", "0.1"}),
                    UsageError);
    auto o = parse_cli({"-sim", "etc_hysteresis", "-hhys", "0.1", "0.2", "-lmbdahys", "0.1", "0.1"});
    CHECK(o.cfg.params.h_hys.size() == 2);
  }
  SUBCASE("processes") {
    CHECK(parse_cli({"-sim", "etc_sample", "-proc", "-4"}).workers == resolve_workers(-4));
    CHECK(parse_cli({"-sim", "etc_sample", "-proc", "2"}).workers == 2);
  }
  SUBCASE("sweeps") {
    auto o = parse_cli({"-sim", "etc_T_sweep", "-Tl", "0.5", "-Tu", "5", "-Ts", "30"});
    CHECK(o.mode == CliMode::T_sweep);
    CHECK(o.sweep.steps == 30);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_T_sweep", "-Tl", "0.5"}), UsageError);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_circle_sweep", "-Thl", "0", "-Thu", "1", "-Ths", "3"}),
                    UsageError);
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_sample", "-nonsense"}), UsageError);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_sample", "-Ns"}), UsageError);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_sample", "-Ns", "many"}), UsageError);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_sample", "-Ns", "10", "-Ns", "20"}), UsageError);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_sample", "-reps", "3"}), UsageError);
    CHECK_THROWS_AS(parse_cli({"-sim", "etc_nothing"}), UsageError);
  }
  CHECK(cli_usage().find("etc_sample") != std::string::npos);
}

TEST_CASE("end to end runs write their files") {
  auto dir = scratch_dir("cli");
  const std::string out = dir.string();
  CHECK(run_args({"-sim", "etc_sample", "-Ns", "16", "-Nth", "20", "-Nbs", "2", "-Nr", "10", "-L",
                  "2", "-hc", "0.2", "-lmbdac", "0.2", "-s", "3", "-obs", "energy", "-snap", "1",
                  "-outdir", out, "-fn", "run"}) == 0);
  CHECK(fs::exists(dir / "run" / "results.json"));
  CHECK(fs::exists(dir / "run" / "snapshots.graphml"));

  CHECK(run_args({"-sim", "etc_thermalization", "-Nth", "20", "-L", "2", "-reps", "2", "-s", "3",
                  "-outdir", out, "-fn", "therm"}) == 0);
  CHECK(fs::exists(dir / "therm" / "replica_1" / "results.json"));

  CHECK(run_args({"-sim", "oracle", "-L", "2", "-hc", "0.2", "-lmbdac", "0.2", "-bet", "1",
                  "-outdir", out, "-fn", "ed"}) == 0);
  auto ed = read_results((dir / "ed" / "oracle.json").string());
  CHECK(ed["simulation"]["results"]["energy"].contains("mean"));

  CHECK(run_args({"-sim", "etc_h_sweep", "-hl", "0", "-hu", "0.4", "-hs", "2", "-Ns", "8", "-Nth",
                  "10", "-Nbs", "1", "-Nr", "5", "-L", "2", "-s", "1", "-outdir", out, "-fn",
                  "sweep"}) == 0);
  CHECK(fs::exists(dir / "sweep" / "point_1" / "results.json"));
  CHECK(read_results((dir / "sweep" / "sweep.json").string())["sweep"]["points"].size() == 2);

  CHECK(run_args({"-sim", "etc_hysteresis", "-hhys", "0.1", "0.2", "-lmbdahys", "0.1", "0.1",
                  "-Ns", "8", "-Nth", "10", "-Nbs", "1", "-Nr", "5", "-L", "2", "-s", "1",
                  "-outdir", out, "-fn", "hys"}) == 0);
  CHECK(fs::exists(dir / "hys" / "results_forward.json"));
  CHECK(fs::exists(dir / "hys" / "results_backward.json"));

  CHECK(run_args({"-bogus"}) == 1);
  CHECK(run_args({"-lmbdac", "-1", "-L", "2", "-outdir", out}) == 1);
  CHECK(run_args({"-h"}) == 0);
}
