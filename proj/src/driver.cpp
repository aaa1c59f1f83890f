#include "toric/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "toric/error.hpp"
#include "toric/stats.hpp"
#include "toric/updates.hpp"

namespace toric {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Observable> parse_all(const std::vector<std::string>& names) {
  std::vector<Observable> out;
  for (const auto& n : names) out.push_back(parse_observable(n));
  return out;
}

Couplings run_couplings(const RunConfig& cfg) {
  return {cfg.params.mu, cfg.params.h, cfg.params.J, cfg.params.lmbda};
}

Couplings therm_couplings(const RunConfig& cfg) {
  Couplings c = run_couplings(cfg);
  if (cfg.sim.custom_therm) {
    c.h = cfg.params.h_therm;
    c.lmbda = cfg.params.lmbda_therm;
  }
  return c;
}

// A lattice, its worldline and the chain's random stream. Heap-pinned because
// the worldline refers to the lattice.
struct Chain {
  Chain(const RunConfig& cfg, const Couplings& c)
      : lattice(build_lattice(cfg.lat.lattice_type, cfg.lat.system_size, cfg.lat.boundaries)),
        w(lattice, cfg.lat.basis, cfg.lat.beta, c, cfg.lat.default_spin),
        rng(cfg.sim.seed),
        measurer(lattice, parse_all(cfg.sim.observables)) {}
  Chain(const Chain&) = delete;
  Chain& operator=(const Chain&) = delete;

  Lattice lattice;
  Worldline w;
  ChainRng rng;
  Measurer measurer;
};

struct Collected {
  std::vector<std::vector<double>> columns;
  std::vector<double> fm_full;
  std::vector<Snapshot> snapshots;
  std::vector<double> acc_ratio;
};

void record(Chain& ch, Collected& col, bool snapshot, std::vector<double>& scratch) {
  double full = kNaN;
  ch.measurer.measure(ch.w, scratch, &full);
  if (col.columns.size() != scratch.size()) col.columns.resize(scratch.size());
  for (std::size_t i = 0; i < scratch.size(); ++i) col.columns[i].push_back(scratch[i]);
  col.fm_full.push_back(full);
  if (snapshot) col.snapshots.push_back(take_snapshot(ch.w));
}

std::mt19937_64 bootstrap_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  return std::mt19937_64(seq);
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double mean_over(const std::vector<double>& v, std::span<const std::size_t> idx, int power) {
  double s = 0.0;
  for (std::size_t i : idx) s += power == 1 ? v[i] : v[i] * v[i];
  return s / idx.size();
}

ObservableResult summarize(Observable o, std::vector<double> series, const std::vector<double>& fm_full,
                           const Worldline& w, int n_resamples, std::uint64_t seed,
                           std::size_t index) {
  ObservableResult r;
  r.name = to_string(o);
  r.series = std::move(series);
  const std::size_t n = r.series.size();
  auto rng = bootstrap_rng(seed, index);
  if (n == 0 || !all_finite(r.series)) {
    r.mean = r.mean_error = r.binder = r.binder_error = kNaN;
    r.autocorrelation_time = kNaN;
    return r;
  }
  if (n < kMinBootstrapLength) {
    r.mean = std::accumulate(r.series.begin(), r.series.end(), 0.0) / n;
    r.mean_error = r.binder_error = kNaN;
    r.binder = binder_ratio(r.series);
    r.autocorrelation_time = n >= 2 ? tau_int(r.series) : 0.5;
    if (!is_series_functional(o)) return r;
  }

  if (!is_series_functional(o)) {
    SeriesStats st = stationary_bootstrap(r.series, n_resamples, rng);
    r.mean = st.mean;
    r.mean_error = st.mean_std;
    r.binder = st.binder;
    r.binder_error = st.binder_std;
    r.autocorrelation_time = st.tau_int;
    return r;
  }

  const std::vector<double>& x = r.series;
  const int nl = w.lattice().n_links();
  const double beta = w.beta();
  std::function<double(std::span<const std::size_t>)> stat;
  double tau = n >= 2 ? tau_int(x) : 0.5;
  const bool diag = (o == Observable::sigma_x_susceptibility) == (w.basis() == Basis::x);
  if (o == Observable::fredenhagen_marcu) {
    if (n >= 2) tau = std::max(tau, tau_int(fm_full));
    stat = [&](std::span<const std::size_t> idx) {
      return fredenhagen_marcu_ratio(mean_over(x, idx, 1), mean_over(fm_full, idx, 1));
    };
  } else if (diag) {
    stat = [&](std::span<const std::size_t> idx) {
      return chi_diagonal(mean_over(x, idx, 1), mean_over(x, idx, 2), beta, nl);
    };
  } else {
    const double g = w.field_coupling();
    stat = [&, g](std::span<const std::size_t> idx) {
      return chi_offdiagonal(mean_over(x, idx, 1), mean_over(x, idx, 2), beta, g, nl);
    };
  }
  r.autocorrelation_time = tau;
  if (n < kMinBootstrapLength) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    r.mean = stat(all);
    return r;
  }
  FunctionalStats fs = bootstrap_functional(n, block_length(tau), n_resamples, stat, rng);
  r.mean = fs.value;
  r.mean_error = fs.std;
  SeriesStats primitive = stationary_bootstrap(x, n_resamples, rng);
  r.binder = primitive.binder;
  r.binder_error = primitive.binder_std;
  return r;
}

RunResult finish(Chain& ch, Collected&& col, int n_resamples) {
  RunResult res;
  const auto& obs = ch.measurer.observables();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::vector<double> series = i < col.columns.size() ? std::move(col.columns[i]) : std::vector<double>{};
    res.observables.push_back(
        summarize(obs[i], std::move(series), col.fm_full, ch.w, n_resamples, ch.rng.seed(), i));
  }
  res.acc_ratio = std::move(col.acc_ratio);
  res.snapshots = std::move(col.snapshots);
  res.couplings = ch.w.couplings();
  res.beta = ch.w.beta();
  res.seed = ch.rng.seed();
  ch.w.check_invariants();
  res.action_deviation = ch.w.action_deviation();
  return res;
}

void thermalize(Chain& ch, long long steps) {
  for (long long i = 0; i < steps; ++i) mc_step(ch.w, ch.rng);
}

Collected sample_phase(Chain& ch, const RunConfig& cfg) {
  Collected col;
  std::vector<double> scratch;
  for (int s = 0; s < cfg.sim.N_samples; ++s) {
    for (int k = 0; k < cfg.sim.N_between_samples; ++k) mc_step(ch.w, ch.rng);
    record(ch, col, cfg.out.save_snapshots, scratch);
  }
  return col;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const ObservableResult& RunResult::at(const std::string& name) const {
  for (const auto& o : observables)
    if (o.name == name) return o;
  throw ConfigError("observable '" + name + "' was not measured");
}

void validate(const RunConfig& cfg, RunMode mode) {
  const auto& s = cfg.sim;
  if (s.N_thermalization < 0) throw ConfigError("N_thermalization must be >= 0");
  if (s.N_resamples < 1) throw ConfigError("N_resamples must be >= 1");
  if (mode != RunMode::thermalization) {
    if (s.N_samples < static_cast<int>(kMinBootstrapLength))
      throw ConfigError("N_samples must be >= " + std::to_string(kMinBootstrapLength) +
                        " for bootstrap error bars");
    if (s.N_between_samples < 1) throw ConfigError("N_between_samples must be >= 1");
  }
  parse_all(s.observables);
  if (!(cfg.lat.beta > 0.0) || !std::isfinite(cfg.lat.beta))
    throw ConfigError("beta must be positive and finite");
  if (cfg.lat.default_spin != 1 && cfg.lat.default_spin != -1)
    throw ConfigError("default_spin must be +1 or -1");
  if (cfg.lat.system_size < 2) throw ConfigError("system_size must be >= 2");
  if (s.custom_therm) {
    if (mode == RunMode::hysteresis)
      throw ConfigError("custom_therm cannot be combined with hysteresis runs");
    if (!std::isfinite(cfg.params.h_therm) || !std::isfinite(cfg.params.lmbda_therm))
      throw ConfigError("custom_therm requires finite h_therm and lmbda_therm");
    Worldline::check_signs(cfg.lat.basis, therm_couplings(cfg));
  }
  if (mode == RunMode::hysteresis) {
    const auto& p = cfg.params;
    if (p.h_hys.empty()) throw ConfigError("hysteresis needs a non-empty h_hys schedule");
    if (p.h_hys.size() != p.lmbda_hys.size())
      throw ConfigError("h_hys and lmbda_hys lengths differ (" + std::to_string(p.h_hys.size()) +
                        " vs " + std::to_string(p.lmbda_hys.size()) + ")");
    if (!cfg.out.paths_out.empty() && cfg.out.paths_out.size() != p.h_hys.size())
      throw ConfigError("paths_out length must match the hysteresis schedule");
    for (std::size_t i = 0; i < p.h_hys.size(); ++i) {
      Couplings c = run_couplings(cfg);
      c.h = p.h_hys[i];
      c.lmbda = p.lmbda_hys[i];
      Worldline::check_signs(cfg.lat.basis, c);
    }
  } else {
    Worldline::check_signs(cfg.lat.basis, run_couplings(cfg));
  }
}

RunResult run_thermalization(const RunConfig& cfg) {
  validate(cfg, RunMode::thermalization);
  const auto t0 = std::chrono::steady_clock::now();
  auto ch = std::make_unique<Chain>(cfg, therm_couplings(cfg));
  Collected col;
  col.acc_ratio.reserve(cfg.sim.N_thermalization);
  std::vector<double> scratch;
  for (int i = 0; i < cfg.sim.N_thermalization; ++i) {
    col.acc_ratio.push_back(mc_step(ch->w, ch->rng).acceptance_probability);
    record(*ch, col, cfg.out.save_snapshots, scratch);
  }
  RunResult res = finish(*ch, std::move(col), cfg.sim.N_resamples);
  res.wall_time_s = seconds_since(t0);
  return res;
}

RunResult run_sample(const RunConfig& cfg) {
  validate(cfg, RunMode::sample);
  const auto t0 = std::chrono::steady_clock::now();
  auto ch = std::make_unique<Chain>(cfg, therm_couplings(cfg));
  thermalize(*ch, cfg.sim.N_thermalization);
  if (cfg.sim.custom_therm) ch->w.set_couplings(run_couplings(cfg));
  RunResult res = finish(*ch, sample_phase(*ch, cfg), cfg.sim.N_resamples);
  res.wall_time_s = seconds_since(t0);
  return res;
}

std::vector<RunResult> run_hysteresis(const RunConfig& cfg) {
  validate(cfg, RunMode::hysteresis);
  const auto& p = cfg.params;
  Couplings c = run_couplings(cfg);
  c.h = p.h_hys[0];
  c.lmbda = p.lmbda_hys[0];
  auto ch = std::make_unique<Chain>(cfg, c);
  std::vector<RunResult> out;
  for (std::size_t i = 0; i < p.h_hys.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    c.h = p.h_hys[i];
    c.lmbda = p.lmbda_hys[i];
    if (i > 0) ch->w.set_couplings(c);
    thermalize(*ch, cfg.sim.N_thermalization);
    out.push_back(finish(*ch, sample_phase(*ch, cfg), cfg.sim.N_resamples));
    out.back().wall_time_s = seconds_since(t0);
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int steps) {
  if (steps < 1) throw ConfigError("sweep steps must be >= 1");
  std::vector<double> v(steps);
  for (int i = 0; i < steps; ++i) v[i] = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
  return v;
}

std::vector<SweepPoint> sweep_points(const RunConfig& base, const SweepSpec& spec) {
  std::vector<SweepPoint> pts;
  const auto& p = base.params;
  for (double v : linspace(spec.lo, spec.hi, spec.steps)) {
    switch (spec.kind) {
      case SweepKind::T:
        if (!(v > 0.0)) throw ConfigError("temperatures in a T sweep must be positive");
        pts.push_back({1.0 / v, p.h, p.lmbda});
        break;
      case SweepKind::h: pts.push_back({base.lat.beta, v, p.lmbda}); break;
      case SweepKind::lmbda: pts.push_back({base.lat.beta, p.h, v}); break;
      case SweepKind::circle:
        pts.push_back({base.lat.beta, p.h + spec.radius * std::sin(v),
                       p.lmbda + spec.radius * std::cos(v)});
        break;
    }
  }
  return pts;
}

std::uint64_t derived_seed(std::uint64_t base, std::size_t index) {
  return base == 0 ? 0 : base + index;
}

std::vector<RunConfig> sweep_configs(const RunConfig& base, const SweepSpec& spec) {
  std::vector<RunConfig> cfgs;
  const auto pts = sweep_points(base, spec);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    RunConfig c = base;
    c.lat.beta = pts[i].beta;
    c.params.h = pts[i].h;
    c.params.lmbda = pts[i].lmbda;
    c.sim.seed = derived_seed(base.sim.seed, i);
    cfgs.push_back(std::move(c));
  }
  return cfgs;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t nthreads = std::min<std::size_t>(std::max(1, workers), n);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < nthreads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<RunResult> run_sweep(const RunConfig& base, const SweepSpec& spec, int workers) {
  const auto cfgs = sweep_configs(base, spec);
  for (const auto& c : cfgs) validate(c, RunMode::sample);
  std::vector<RunResult> out(cfgs.size());
  parallel_for(cfgs.size(), workers, [&](std::size_t i) { out[i] = run_sample(cfgs[i]); });
  return out;
}

std::vector<std::vector<RunResult>> run_hysteresis_two_branch(const RunConfig& base, int workers) {
  validate(base, RunMode::hysteresis);
  RunConfig rev = base;
  std::reverse(rev.params.h_hys.begin(), rev.params.h_hys.end());
  std::reverse(rev.params.lmbda_hys.begin(), rev.params.lmbda_hys.end());
  rev.sim.seed = derived_seed(base.sim.seed, 1);
  std::vector<RunConfig> cfgs{base, rev};
  std::vector<std::vector<RunResult>> out(2);
  parallel_for(2, workers, [&](std::size_t i) { out[i] = run_hysteresis(cfgs[i]); });
  return out;
}

std::vector<RunResult> run_replicas(const RunConfig& base, RunMode mode, int replicas,
                                    int workers) {
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (mode == RunMode::hysteresis) throw ConfigError("use run_hysteresis_two_branch");
  validate(base, mode);
  std::vector<RunResult> out(replicas);
  parallel_for(replicas, workers, [&](std::size_t i) {
    RunConfig c = base;
    c.sim.seed = derived_seed(base.sim.seed, i);
    out[i] = mode == RunMode::sample ? run_sample(c) : run_thermalization(c);
  });
  return out;
}

int hardware_cores() { return std::max(1u, std::thread::hardware_concurrency()); }

int resolve_workers(int proc) {
  if (proc > 0) return proc;
  return std::max(1, hardware_cores() + proc);
}

int default_workers() { return resolve_workers(-4); }

long long thermalization_heuristic(int L, int dim, double T) {
  if (!(T > 0.0)) throw ConfigError("temperature must be positive");
  return static_cast<long long>(std::llround(500.0 * std::pow(L, dim) / T));
}

}  // namespace toric
