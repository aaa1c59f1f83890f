#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "toric/lattice.hpp"
#include "toric/observables.hpp"
#include "toric/worldline.hpp"

namespace toric {

struct SimParams {
  int N_samples = 1000;
  int N_thermalization = 10000;
  int N_between_samples = 1000;
  int N_resamples = 1000;
  bool custom_therm = false;
  std::uint64_t seed = 0;  // 0 draws a random seed
  std::vector<std::string> observables;
};

struct HamParams {
  double mu = 1.0;
  double h = 0.0;
  double J = 1.0;
  double lmbda = 0.0;
  double h_therm = std::numeric_limits<double>::quiet_NaN();
  double lmbda_therm = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> h_hys;
  std::vector<double> lmbda_hys;
};

struct LatParams {
  Basis basis = Basis::x;
  LatticeType lattice_type = LatticeType::square;
  int system_size = 4;
  double beta = 1.0;
  Boundaries boundaries = Boundaries::periodic;
  int default_spin = 1;
};

struct OutParams {
  std::string path_out;
  std::vector<std::string> paths_out;
  bool save_snapshots = false;
  bool full_time_series = false;
};

struct RunConfig {
  SimParams sim;
  HamParams params;
  LatParams lat;
  OutParams out;
};

enum class RunMode { thermalization, sample, hysteresis };

struct ObservableResult {
  std::string name;
  // per-sample values; for series functionals the raw primitive (see Measurer)
  std::vector<double> series;
  double mean = 0.0;
  double mean_error = 0.0;
  double binder = 0.0;
  double binder_error = 0.0;
  double autocorrelation_time = 0.5;
};

struct RunResult {
  std::vector<ObservableResult> observables;
  std::vector<double> acc_ratio;  // thermalization mode only
  std::vector<Snapshot> snapshots;
  Couplings couplings;
  double beta = 0.0;
  std::uint64_t seed = 0;
  double action_deviation = 0.0;
  double wall_time_s = 0.0;

  const ObservableResult& at(const std::string& name) const;
};

// Throws ConfigError on invalid settings for the given mode.
void validate(const RunConfig& cfg, RunMode mode);

RunResult run_thermalization(const RunConfig& cfg);
RunResult run_sample(const RunConfig& cfg);
std::vector<RunResult> run_hysteresis(const RunConfig& cfg);

enum class SweepKind { T, h, lmbda, circle };

struct SweepSpec {
  SweepKind kind = SweepKind::T;
  double lo = 0.0;  // T, h, lmbda or angle range
  double hi = 0.0;
  int steps = 1;
  double radius = 0.0;  // circle: lmbda = lmbda_c + r cos, h = h_c + r sin
};

struct SweepPoint {
  double beta;
  double h;
  double lmbda;
};

std::vector<double> linspace(double lo, double hi, int steps);
// Circle centre is taken from cfg.params (lmbda, h).
std::vector<SweepPoint> sweep_points(const RunConfig& base, const SweepSpec& spec);
// Per-point configuration: couplings/beta from the point, seed base + i.
std::vector<RunConfig> sweep_configs(const RunConfig& base, const SweepSpec& spec);

std::vector<RunResult> run_sweep(const RunConfig& base, const SweepSpec& spec, int workers);
// Forward and reversed hysteresis schedules on two independent chains.
std::vector<std::vector<RunResult>> run_hysteresis_two_branch(const RunConfig& base, int workers);
// Independent chains of one mode with seeds base + i.
std::vector<RunResult> run_replicas(const RunConfig& base, RunMode mode, int replicas,
                                    int workers);

std::uint64_t derived_seed(std::uint64_t base, std::size_t index);

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
// failure after all threads joined.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

int hardware_cores();
// >0: exactly that many; 0: all cores; <0: all cores minus |proc|; at least 1.
int resolve_workers(int proc);
int default_workers();

// 500 L^d / T steps.
long long thermalization_heuristic(int L, int dim, double T);

}  // namespace toric
