#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "toric/lattice.hpp"
#include "toric/worldline.hpp"

namespace toric {

enum class Observable {
  anyon_count,
  anyon_density,
  delta,
  energy,
  energy_h,
  energy_lmbda,
  energy_J,
  energy_mu,
  fredenhagen_marcu,
  largest_cluster,
  percolation_probability,
  percolation_strength,
  plaquette_percolation_probability,
  plaquette_z,
  sigma_x,
  sigma_x_susceptibility,
  sigma_z,
  sigma_z_susceptibility,
  staggered_imaginary_times,
  star_x,
  string_number,
};

const std::vector<std::string>& observable_names();
Observable parse_observable(std::string_view name);
std::string to_string(Observable o);

// Per-link spins in the simulated basis on the tau = 0 slice.
using Snapshot = std::vector<std::int8_t>;

Snapshot take_snapshot(const Worldline& w);

struct AnyonStats {
  int count;
  double density;
};
AnyonStats anyon_stats(const Snapshot& s, const Lattice& lat, Basis basis);

struct StringField {
  int string_number;
  double sigma_diag;
};
StringField string_and_field(const Snapshot& s, const Worldline& w);

// Missing values (off-diagonal estimator at zero coupling) are NaN.
struct Stabilizers {
  double star_x;
  double plaquette_z;
  double delta;
};
Stabilizers stabilizer_estimators(const Worldline& w);

struct Energies {
  double energy;
  double energy_mu;
  double energy_h;
  double energy_J;
  double energy_lmbda;
};
Energies energy_estimators(const Worldline& w);

struct Percolation {
  int indicator;
  int largest_cluster;
  double strength;
};
Percolation percolation_analysis(const Snapshot& s, const Lattice& lat);
int plaquette_percolation(const Snapshot& s, const Lattice& lat);

struct LoopTerms {
  int W_half;
  int W_full;
};
LoopTerms fredenhagen_marcu_terms(const Snapshot& s, const FmLoopPair& loops);
// NaN when mean_full is zero.
double fredenhagen_marcu_ratio(double mean_half, double mean_full);
int default_fm_loop_scale(const Lattice& lat);

double staggered_imaginary_times(const Worldline& w);

struct SusceptibilityPrimitives {
  double M;  // integral over [0, beta) of the summed diagonal Pauli
  double n_field;
  double n_interaction;
};
SusceptibilityPrimitives susceptibility_primitives(const Worldline& w);

// (<M^2> - <M>^2) / (beta N)
double chi_diagonal(double mean_M, double mean_M2, double beta, int n_links);
// (<n^2> - <n>^2 - <n>) / (beta g^2 N); NaN for g = 0
double chi_offdiagonal(double mean_n, double mean_n2, double beta, double g, int n_links);

// Which observables are formed from whole series rather than per sample.
bool is_series_functional(Observable o);

// Evaluates a fixed observable list on a configuration. For series
// functionals the per-sample value is the raw primitive: M or the field kink
// count for the susceptibilities and W_half for fredenhagen_marcu (W_full is
// stored in a companion column).
class Measurer {
 public:
  Measurer(const Lattice& lat, std::vector<Observable> observables);

  const std::vector<Observable>& observables() const { return obs_; }
  const FmLoopPair* loops() const { return has_loops_ ? &loops_ : nullptr; }

  // values[i] for observables()[i]; fm_full receives W_full when requested.
  void measure(const Worldline& w, std::vector<double>& values, double* fm_full = nullptr) const;

 private:
  const Lattice* lat_;
  std::vector<Observable> obs_;
  FmLoopPair loops_;
  bool has_loops_ = false;
};

}  // namespace toric
