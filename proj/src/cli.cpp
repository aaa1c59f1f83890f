#include "toric/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "toric/error.hpp"
#include "toric/io.hpp"
#include "toric/oracle.hpp"

namespace toric {

namespace fs = std::filesystem;

namespace {

enum class Kind { integer, real, boolean, text, reals, texts, none };

struct FlagSpec {
  const char* key;
  Kind kind;
  std::vector<std::string> names;
};

const std::vector<FlagSpec>& flag_table() {
  static const std::vector<FlagSpec> table = {
      {"help", Kind::none, {"--help", "-h"}},
      {"sim", Kind::text, {"--simulation", "-sim"}},
      {"Ns", Kind::integer, {"--N_samples", "-Ns"}},
      {"Nth", Kind::integer, {"--N_thermalization", "-Nth"}},
      {"Nbs", Kind::integer, {"--N_between_samples", "--N_between_steps", "-Nbs"}},
      {"Nr", Kind::integer, {"--N_resamples", "-Nr"}},
      {"bet", Kind::real, {"--beta", "-bet"}},
      {"T", Kind::real, {"--temperature", "-T"}},
      {"muc", Kind::real, {"--mu_constant", "-muc"}},
      {"Jc", Kind::real, {"--J_constant", "-Jc"}},
      {"hc", Kind::real, {"--h_constant", "-hc"}},
      {"lmbdac", Kind::real, {"--lmbda_constant", "-lmbdac"}},
      {"hct", Kind::real, {"--h_constant_therm", "-hct"}},
      {"lmbdact", Kind::real, {"--lmbda_constant_therm", "-lmbdact"}},
      {"cth", Kind::boolean, {"--custom_therm", "-cth"}},
      {"hhys", Kind::reals, {"--h_hysteresis", "-hhys"}},
      {"lmbdahys", Kind::reals, {"--lmbda_hysteresis", "-lmbdahys"}},
      {"obs", Kind::texts, {"--observables", "-obs"}},
      {"seed", Kind::text, {"--seed", "-seed", "-s"}},
      {"bas", Kind::text, {"--basis", "-bas"}},
      {"lat", Kind::text, {"--lattice_type", "-lat"}},
      {"L", Kind::integer, {"--system_size", "-L"}},
      {"bound", Kind::text, {"--boundaries", "-bound"}},
      {"dsp", Kind::integer, {"--default_spin", "-dsp"}},
      {"outdir", Kind::text, {"--output_directory", "-outdir"}},
      {"fn", Kind::text, {"--folder_name", "-fn"}},
      {"fns", Kind::texts, {"--folder_names", "-fns"}},
      {"snap", Kind::boolean, {"--snapshots", "-snap"}},
      {"fts", Kind::boolean, {"--full_time_series", "-fts", "-fcs"}},
      {"procid", Kind::integer, {"--process_index", "-procid"}},
      {"proc", Kind::integer, {"--processes", "-proc"}},
      {"Tl", Kind::real, {"-Tl"}},
      {"Tu", Kind::real, {"-Tu"}},
      {"Ts", Kind::integer, {"-Ts"}},
      {"hl", Kind::real, {"-hl"}},
      {"hu", Kind::real, {"-hu"}},
      {"hs", Kind::integer, {"-hs"}},
      {"lmbdal", Kind::real, {"-lmbdal"}},
      {"lmbdau", Kind::real, {"-lmbdau"}},
      {"lmbdas", Kind::integer, {"-lmbdas"}},
      {"rad", Kind::real, {"-rad"}},
      {"Thl", Kind::real, {"-Thl"}},
      {"Thu", Kind::real, {"-Thu"}},
      {"Ths", Kind::integer, {"-Ths"}},
      {"reps", Kind::integer, {"-reps"}},
      {"csv", Kind::none, {"--emit-csv"}},
  };
  return table;
}

const std::map<std::string, const FlagSpec*>& flag_index() {
  static const auto index = [] {
    std::map<std::string, const FlagSpec*> m;
    for (const auto& f : flag_table())
      for (const auto& n : f.names) m[n] = &f;
    return m;
  }();
  return index;
}

bool is_flag(const std::string& tok) {
  if (tok.size() < 2 || tok[0] != '-') return false;
  const char c = tok[1];
  return !(std::isdigit(static_cast<unsigned char>(c)) || c == '.');
}

struct Given {
  std::string spelled;  // as typed, for diagnostics
  std::vector<std::string> values;
};

[[noreturn]] void usage_fail(const std::string& flag, const std::string& what) {
  throw UsageError(flag + ": " + what);
}

long long to_integer(const Given& g) {
  const std::string& s = g.values.front();
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    usage_fail(g.spelled, "expected an integer, got '" + s + "'");
  return v;
}

double to_real(const Given& g, const std::string& s) {
  double v = 0;
  const char* b = s.data();
  if (!s.empty() && s[0] == '+') ++b;
  auto [p, ec] = std::from_chars(b, s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    usage_fail(g.spelled, "expected a number, got '" + s + "'");
  return v;
}

bool to_bool(const Given& g) {
  if (g.values.empty()) return true;
  const std::string& s = g.values.front();
  if (s == "1" || s == "true" || s == "True") return true;
  if (s == "0" || s == "false" || s == "False") return false;
  usage_fail(g.spelled, "expected 0 or 1, got '" + s + "'");
}

std::map<std::string, Given> tokenize(const std::vector<std::string>& args) {
  std::map<std::string, Given> given;
  const auto& index = flag_index();
  std::size_t i = 0;
  while (i < args.size()) {
    const std::string& tok = args[i];
    if (!is_flag(tok)) throw UsageError("unexpected value '" + tok + "' without a flag");
    std::string name = tok;
    Given g;
    if (auto eq = tok.find('='); eq != std::string::npos) {
      name = tok.substr(0, eq);
      g.values.push_back(tok.substr(eq + 1));
    }
    g.spelled = name;
    auto it = index.find(name);
    if (it == index.end()) throw UsageError(name + ": unknown flag (see --help)");
    ++i;
    while (i < args.size() && !is_flag(args[i])) g.values.push_back(args[i++]);
    const FlagSpec& spec = *it->second;
    if (given.count(spec.key)) usage_fail(name, "given more than once");
    switch (spec.kind) {
      case Kind::none:
        if (!g.values.empty()) usage_fail(name, "takes no value");
        break;
      case Kind::boolean:
        if (g.values.size() > 1) usage_fail(name, "takes a single value");
        break;
      case Kind::reals:
      case Kind::texts:
        if (g.values.empty()) usage_fail(name, "expects at least one value");
        break;
      default:
        if (g.values.size() != 1) usage_fail(name, "expects exactly one value");
    }
    given[spec.key] = std::move(g);
  }
  return given;
}

CliMode parse_mode(const Given& g) {
  static const std::map<std::string, CliMode> modes = {
      {"etc_sample", CliMode::sample},
      {"etc_hysteresis", CliMode::hysteresis},
      {"etc_thermalization", CliMode::thermalization},
      {"etc_T_sweep", CliMode::T_sweep},
      {"etc_h_sweep", CliMode::h_sweep},
      {"etc_lmbda_sweep", CliMode::lmbda_sweep},
      {"etc_circle_sweep", CliMode::circle_sweep},
      {"oracle", CliMode::oracle},
  };
  auto it = modes.find(g.values.front());
  if (it == modes.end()) {
    std::string valid;
    for (const auto& [k, v] : modes) valid += (valid.empty() ? "" : ", ") + k;
    usage_fail(g.spelled, "unknown simulation '" + g.values.front() + "' (valid: " + valid + ")");
  }
  return it->second;
}

template <class F>
auto wrap_value(const Given& g, F&& parse) {
  try {
    return parse(g.values.front());
  } catch (const std::exception& e) {
    usage_fail(g.spelled, e.what());
  }
}

}  // namespace

CliOptions parse_cli(const std::vector<std::string>& args) {
  auto given = tokenize(args);
  CliOptions o;
  if (given.count("help")) {
    o.help = true;
    return o;
  }
  auto has = [&](const char* k) { return given.count(k) > 0; };
  auto get = [&](const char* k) -> const Given& { return given.at(k); };
  auto require = [&](const char* k, const char* flag) -> const Given& {
    if (!has(k)) usage_fail(flag, std::string("required for -sim ") + get("sim").values.front());
    return get(k);
  };
  auto integer = [&](const char* k, auto& target) {
    if (has(k)) target = static_cast<std::remove_reference_t<decltype(target)>>(to_integer(get(k)));
  };
  auto real = [&](const char* k, double& target) {
    if (has(k)) target = to_real(get(k), get(k).values.front());
  };
  auto reals = [&](const char* k) {
    std::vector<double> v;
    for (const auto& s : get(k).values) v.push_back(to_real(get(k), s));
    return v;
  };

  if (!has("sim")) usage_fail("-sim", "missing; choose a simulation mode");
  o.mode = parse_mode(get("sim"));

  RunConfig& c = o.cfg;
  integer("Ns", c.sim.N_samples);
  integer("Nth", c.sim.N_thermalization);
  integer("Nbs", c.sim.N_between_samples);
  integer("Nr", c.sim.N_resamples);
  if (has("cth")) c.sim.custom_therm = to_bool(get("cth"));
  if (has("seed")) {
    const Given& g = get("seed");
    const std::string& s = g.values.front();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      usage_fail(g.spelled, "expected a non-negative integer, got '" + s + "'");
    c.sim.seed = v;
  }
  if (has("obs")) {
    c.sim.observables = get("obs").values;
    for (const auto& n : c.sim.observables) wrap_value(Given{get("obs").spelled, {n}}, parse_observable);
  }

  if (has("T") && has("bet")) usage_fail(get("T").spelled, "cannot be combined with -bet");
  real("bet", c.lat.beta);
  if (has("T")) {
    double T = 0;
    real("T", T);
    if (!(T > 0)) usage_fail(get("T").spelled, "temperature must be positive");
    c.lat.beta = 1.0 / T;
  }
  real("muc", c.params.mu);
  real("Jc", c.params.J);
  real("hc", c.params.h);
  real("lmbdac", c.params.lmbda);
  real("hct", c.params.h_therm);
  real("lmbdact", c.params.lmbda_therm);
  if (has("hhys")) c.params.h_hys = reals("hhys");
  if (has("lmbdahys")) c.params.lmbda_hys = reals("lmbdahys");

  if (has("bas")) c.lat.basis = wrap_value(get("bas"), parse_basis);
  if (has("lat")) c.lat.lattice_type = wrap_value(get("lat"), parse_lattice_type);
  if (has("bound")) c.lat.boundaries = wrap_value(get("bound"), parse_boundaries);
  integer("L", c.lat.system_size);
  integer("dsp", c.lat.default_spin);

  if (has("outdir")) o.output_directory = get("outdir").values.front();
  if (has("fn")) o.folder_name = get("fn").values.front();
  if (has("fns")) c.out.paths_out = get("fns").values;
  if (has("snap")) c.out.save_snapshots = to_bool(get("snap"));
  if (has("fts")) c.out.full_time_series = to_bool(get("fts"));
  o.emit_csv = has("csv");
  integer("procid", o.process_index);
  o.workers = default_workers();
  if (has("proc")) o.workers = resolve_workers(static_cast<int>(to_integer(get("proc"))));
  if (has("reps")) {
    o.replicas = static_cast<int>(to_integer(get("reps")));
    if (o.replicas < 1) usage_fail(get("reps").spelled, "must be >= 1");
  }

  auto real_of = [&](const char* k, const char* flag) {
    const Given& g = require(k, flag);
    return to_real(g, g.values.front());
  };
  auto sweep = [&](SweepKind kind, const char* lo, const char* hi, const char* steps,
                   const char* lo_flag, const char* hi_flag, const char* steps_flag) {
    o.sweep.kind = kind;
    o.sweep.lo = real_of(lo, lo_flag);
    o.sweep.hi = real_of(hi, hi_flag);
    o.sweep.steps = static_cast<int>(to_integer(require(steps, steps_flag)));
    if (o.sweep.steps < 1) usage_fail(steps_flag, "must be >= 1");
  };
  switch (o.mode) {
    case CliMode::T_sweep:
      if (has("bet") || has("T"))
        usage_fail(has("T") ? get("T").spelled : get("bet").spelled,
                   "conflicts with the temperature sweep");
      sweep(SweepKind::T, "Tl", "Tu", "Ts", "-Tl", "-Tu", "-Ts");
      if (!(o.sweep.lo > 0 && o.sweep.hi > 0)) usage_fail("-Tl", "temperatures must be positive");
      break;
    case CliMode::h_sweep: sweep(SweepKind::h, "hl", "hu", "hs", "-hl", "-hu", "-hs"); break;
    case CliMode::lmbda_sweep:
      sweep(SweepKind::lmbda, "lmbdal", "lmbdau", "lmbdas", "-lmbdal", "-lmbdau", "-lmbdas");
      break;
    case CliMode::circle_sweep:
      sweep(SweepKind::circle, "Thl", "Thu", "Ths", "-Thl", "-Thu", "-Ths");
      o.sweep.radius = real_of("rad", "-rad");
      break;
    case CliMode::hysteresis: {
      const auto& h = require("hhys", "-hhys");
      const auto& l = require("lmbdahys", "-lmbdahys");
      if (h.values.size() != l.values.size())
        usage_fail(l.spelled, "length " + std::to_string(l.values.size()) +
                                  " does not match -hhys length " +
                                  std::to_string(h.values.size()));
      if (has("fns") && get("fns").values.size() != l.values.size())
        usage_fail(get("fns").spelled, "length " + std::to_string(get("fns").values.size()) +
                                           " does not match -lmbdahys length " +
                                           std::to_string(l.values.size()));
      break;
    }
    case CliMode::thermalization:
    case CliMode::sample:
    case CliMode::oracle: break;
  }
  if (has("reps") && o.mode != CliMode::thermalization)
    usage_fail(get("reps").spelled, "only valid with -sim etc_thermalization");
  if (c.sim.custom_therm && (!has("hct") || !has("lmbdact")))
    usage_fail(has("hct") ? "-lmbdact" : "-hct", "required when -cth 1");
  return o;
}

std::string cli_usage() {
  return R"(usage: paratoric -sim MODE [options]

modes:
  etc_sample          thermalize, then record N_samples measurements
  etc_thermalization  record every thermalization step (use -reps for replicas)
  etc_hysteresis      forward and reversed schedules -hhys/-lmbdahys on two chains
  etc_T_sweep         -Tl -Tu -Ts     independent chains over temperatures
  etc_h_sweep         -hl -hu -hs     independent chains over h
  etc_lmbda_sweep     -lmbdal -lmbdau -lmbdas
  etc_circle_sweep    -rad -Thl -Thu -Ths, centred on (-lmbdac, -hc)
  oracle              exact diagonalization reference values (at most 14 links)

simulation:
  -Ns  --N_samples           -Nth --N_thermalization    -Nbs --N_between_samples
  -Nr  --N_resamples         -cth --custom_therm 0|1    -s   --seed (0 = random)
  -obs --observables NAME...

hamiltonian:
  -muc --mu_constant   -Jc --J_constant   -hc --h_constant   -lmbdac --lmbda_constant
  -hct --h_constant_therm   -lmbdact --lmbda_constant_therm
  -hhys --h_hysteresis X...   -lmbdahys --lmbda_hysteresis X...
  -bet --beta   or   -T --temperature   (not both)

lattice:
  -bas --basis x|z   -lat --lattice_type square|triangular|honeycomb|cubic
  -L --system_size   -bound --boundaries periodic|open   -dsp --default_spin 1|-1

output:
  -outdir --output_directory   -fn --folder_name   -fns --folder_names NAME...
  -snap --snapshots 0|1        -fts/-fcs --full_time_series 0|1   --emit-csv
  -proc --processes N (0 all cores, -x all but x; default -4)   -procid --process_index
)";
}

namespace {

std::string join(const std::string& a, const std::string& b) {
  return b.empty() ? a : (fs::path(a) / b).string();
}

void write_run(const CliOptions& o, RunMode mode, const RunResult& r, const std::string& dir,
               const std::string& stem = "results") {
  write_results(results_document(o.cfg, mode, r), join(dir, stem + ".json"));
  if (o.cfg.out.save_snapshots) {
    Lattice lat =
        build_lattice(o.cfg.lat.lattice_type, o.cfg.lat.system_size, o.cfg.lat.boundaries);
    const std::string path = join(dir, "snapshots.graphml");
    if (!write_snapshots(r.snapshots, lat, {o.cfg.lat.basis, r.beta, r.couplings}, path))
      std::cerr << "warning: no snapshots were recorded, " << path << " not written\n";
  }
  if (o.emit_csv) write_text_atomic(join(dir, stem + "_series.csv"), series_csv(r));
}

void write_hysteresis_branch(const CliOptions& o, const RunConfig& cfg,
                             const std::vector<RunResult>& steps, const std::string& branch,
                             bool reversed) {
  write_results(hysteresis_document(cfg, steps),
                join(o.output_directory, join(o.folder_name, "results_" + branch + ".json")));
  const std::size_t n = steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slot = reversed ? n - 1 - i : i;
    const std::string sub =
        cfg.out.paths_out.empty() ? "step" + std::to_string(slot) : o.cfg.out.paths_out[slot];
    const std::string dir = join(o.output_directory, join(o.folder_name, sub));
    if (cfg.out.save_snapshots) {
      Lattice lat = build_lattice(cfg.lat.lattice_type, cfg.lat.system_size, cfg.lat.boundaries);
      write_snapshots(steps[i].snapshots, lat, {cfg.lat.basis, steps[i].beta, steps[i].couplings},
                      join(dir, "snapshots_" + branch + ".graphml"));
    }
    if (o.emit_csv) write_text_atomic(join(dir, "series_" + branch + ".csv"), series_csv(steps[i]));
  }
}

void run_oracle(const CliOptions& o) {
  const auto& c = o.cfg;
  Lattice lat = build_lattice(c.lat.lattice_type, c.lat.system_size, c.lat.boundaries);
  Couplings cp{c.params.mu, c.params.h, c.params.J, c.params.lmbda};
  auto H = oracle::build_hamiltonian(lat, cp, c.lat.basis);
  nlohmann::json results = nlohmann::json::object();
  for (const auto& [k, v] : oracle::thermal_expectations(H, c.lat.beta))
    results[k]["mean"] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  nlohmann::json doc;
  doc["simulation"]["results"] = results;
  doc["simulation"]["metadata"] = metadata_block(c, RunMode::sample, 0.0, 0);
  doc["simulation"]["metadata"]["mode"] = "oracle";
  write_results(doc, join(join(o.output_directory, o.folder_name), "oracle.json"));
}

void run_sweep_mode(const CliOptions& o) {
  const auto cfgs = sweep_configs(o.cfg, o.sweep);
  const auto results = run_sweep(o.cfg, o.sweep, o.workers);
  const std::string root = join(o.output_directory, o.folder_name);
  nlohmann::json index = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    CliOptions po = o;
    po.cfg = cfgs[i];
    const std::string sub = "point_" + std::to_string(i);
    write_run(po, RunMode::sample, results[i], join(root, sub));
    index.push_back({{"folder", sub},
                     {"beta", cfgs[i].lat.beta},
                     {"T", 1.0 / cfgs[i].lat.beta},
                     {"h", cfgs[i].params.h},
                     {"lmbda", cfgs[i].params.lmbda},
                     {"seed_used", results[i].seed}});
  }
  nlohmann::json doc;
  doc["sweep"]["points"] = index;
  write_results(doc, join(root, "sweep.json"));
}

void dispatch(const CliOptions& o) {
  const std::string dir = join(o.output_directory, o.folder_name);
  switch (o.mode) {
    case CliMode::sample: write_run(o, RunMode::sample, run_sample(o.cfg), dir); break;
    case CliMode::thermalization: {
      auto runs = run_replicas(o.cfg, RunMode::thermalization, o.replicas, o.workers);
      if (runs.size() == 1) {
        write_run(o, RunMode::thermalization, runs[0], dir);
      } else {
        for (std::size_t i = 0; i < runs.size(); ++i)
          write_run(o, RunMode::thermalization, runs[i], join(dir, "replica_" + std::to_string(i)));
      }
      break;
    }
    case CliMode::hysteresis: {
      auto branches = run_hysteresis_two_branch(o.cfg, o.workers);
      RunConfig rev = o.cfg;
      std::reverse(rev.params.h_hys.begin(), rev.params.h_hys.end());
      std::reverse(rev.params.lmbda_hys.begin(), rev.params.lmbda_hys.end());
      std::reverse(rev.out.paths_out.begin(), rev.out.paths_out.end());
      write_hysteresis_branch(o, o.cfg, branches[0], "forward", false);
      write_hysteresis_branch(o, rev, branches[1], "backward", true);
      break;
    }
    case CliMode::T_sweep:
    case CliMode::h_sweep:
    case CliMode::lmbda_sweep:
    case CliMode::circle_sweep: run_sweep_mode(o); break;
    case CliMode::oracle: run_oracle(o); break;
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string tag = "paratoric";
  try {
    CliOptions o = parse_cli(args);
    if (o.help) {
      std::cout << cli_usage();
      return 0;
    }
    if (o.process_index != 0) tag += "[" + std::to_string(o.process_index) + "]";
    dispatch(o);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << tag << ": usage error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << tag << ": invalid configuration: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << tag << ": error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace toric
