#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "toric/lattice.hpp"

namespace toric {

enum class Basis { x, z };
enum class Species : std::uint8_t { field = 0, interaction = 1 };
enum class FlipScope { single_link, interaction_cell };

Basis parse_basis(std::string_view name);
char to_char(Basis b);

struct Couplings {
  double mu = 1.0;
  double h = 0.0;
  double J = 1.0;
  double lmbda = 0.0;
};

struct Kink {
  double time;
  Species species;
  int target;
};

// Fixed-point sum with 64 fractional bits. Adding d and later -d restores the
// previous value exactly, which floating-point accumulation does not.
class ExactSum {
 public:
  void reset(double value);
  void add(double delta);
  double value() const;

 private:
  __int128 raw_ = 0;
};

// Continuous imaginary-time configuration on [0, beta).
//
// Convention: a flip at time t changes the spin for tau in [t, next flip);
// base_spin is the value on [0, first flip). Flip times lie in (0, beta) and
// are unique per link.
class Worldline {
 public:
  Worldline(const Lattice& lattice, Basis basis, double beta, Couplings couplings,
            int default_spin = 1);

  const Lattice& lattice() const { return *lattice_; }
  Basis basis() const { return basis_; }
  double beta() const { return beta_; }
  const Couplings& couplings() const { return couplings_; }

  // Validates the sign rule and recomputes the cached action.
  void set_couplings(const Couplings& couplings);

  // Couplings by role in the current basis.
  double field_coupling() const;        // single-link kinks: lmbda (x), h (z)
  double interaction_coupling() const;  // multi-link kinks: J (x), mu (z)
  double diag_field_coupling() const;   // h (x), lmbda (z)
  double diag_cell_coupling() const;    // mu (x), J (z)

  int n_targets(Species s) const;
  const std::vector<int>& target_links(Species s, int target) const;
  // Stabilizers diagonal in the simulated basis: stars (x) or plaquettes (z).
  const std::vector<std::vector<int>>& diag_cells() const { return *diag_cells_; }
  const std::vector<std::vector<int>>& interaction_targets() const { return *targets_; }

  int base_spin(int link) const { return link_lines_[link].base; }
  int spin_at(int link, double tau) const;
  const std::vector<double>& flips(int link) const { return link_lines_[link].times; }

  std::size_t n_kinks(Species s) const { return count_[static_cast<int>(s)]; }
  std::size_t n_kinks() const { return kinks_.size(); }
  const Kink& kink(std::size_t slot) const { return kinks_[slot]; }
  // Kink times of one species on one target, ascending.
  std::vector<double> kink_times(Species s, int target) const;
  std::size_t n_kinks_on(Species s, int target) const {
    return by_target_[static_cast<int>(s)][target].size();
  }

  double action() const { return action_.value(); }
  double recompute_action() const;
  // |U_cached - recompute| / max(1, |U_cached|)
  double action_deviation() const;

  // Change of action if the pair (t1, t2) were inserted; the links of the
  // target flip on the wrapped arc [t1, t2). nullopt on a time collision.
  std::optional<double> pair_delta(Species s, int target, double t1, double t2) const;
  std::optional<double> apply_kink_pair(Species s, int target, double t1, double t2);
  // Both kinks must exist on the target. Flips the arc [t1, t2) back.
  double remove_pair_delta(Species s, int target, double t1, double t2) const;
  double remove_kink_pair(Species s, int target, double t1, double t2);

  // Conversion: one interaction kink at t0 on the target plus one field kink
  // on each of its links, link i at field_times[i]. Link i flips on the
  // wrapped arc [t0, field_times[i]). These closed configurations have an odd
  // kink count per target, which pair moves alone never reach.
  std::optional<double> apply_conversion(int target, double t0,
                                         const std::vector<double>& field_times);
  // All kinks must exist; the exact inverse of apply_conversion.
  double remove_conversion(int target, double t0, const std::vector<double>& field_times);

  // Relations: sets of interaction targets whose operator product is the
  // identity (all plaquettes or all stars of a closed surface, elementary
  // cubes). One kink per member at times[k] closes on its own; each link
  // flips between consecutive sorted member times, never across tau = 0.
  std::size_t n_relations() const { return relations_.size(); }
  const std::vector<int>& relation_targets(std::size_t r) const { return relations_[r].targets; }
  std::optional<double> apply_relation(std::size_t r, const std::vector<double>& times);
  double remove_relation(std::size_t r, const std::vector<double>& times);

  // Whole-line flip sets. single_link: one per link. interaction_cell: the
  // interaction targets, then one non-contractible set per periodic
  // direction that commutes with every diagonal cell (a winding cycle in
  // basis x, a layer cut in basis z); only these change the winding sector.
  int n_flip_sets(FlipScope scope) const;
  const std::vector<int>& flip_set(FlipScope scope, int id) const;

  double flip_delta(FlipScope scope, int id) const;
  double flip_whole_line(FlipScope scope, int id);

  struct Window {
    double lo;
    double length;
  };
  // Open interval between the temporal neighbours of the kink, intersected
  // over all links it touches. lo may be negative (wraps below zero).
  Window shift_window(std::size_t slot) const;
  // new_time is unwrapped, i.e. inside (lo, lo + length).
  std::optional<double> shift_delta(std::size_t slot, double new_time) const;
  double shift_kink(std::size_t slot, double new_time);

  double spin_integral(int link) const;  // integral of sigma_l over [0, beta)
  double cell_integral(int cell) const;  // integral of the diagonal stabilizer
  double magnetization_integral() const;
  double cell_sum_integral() const;

  // Throws ConfigError when a coupling would make weights negative.
  static void check_signs(Basis basis, const Couplings& c);

  // Throws std::logic_error describing the first broken invariant.
  void check_invariants(double tolerance = 1e-8) const;

 private:
  struct Relation {
    std::vector<int> targets;
    std::vector<int> links;
    std::vector<std::vector<int>> members;  // per link: indices into targets
  };

  void build_relations();
  double toggle_relation_links(const Relation& rel, const std::vector<double>& times,
                               bool reverse);

  struct Timed {
    double time;
    std::uint32_t slot;
  };

  // Piecewise-constant +-1 function on [0, beta) that switches sign at
  // `times`, with running integrals in fixed point (2^-60 units of time).
  // Integer prefix sums make arc integrals O(log n) and exactly
  // antisymmetric: flipping an arc negates its integral bit for bit.
  struct Line {
    int base = 1;
    std::vector<double> times;
    std::vector<std::int64_t> prefix;  // integral over [0, times[i])

    int value_at(double t) const;
    std::int64_t integral_to(double t) const;
    std::int64_t integral(double x, double y) const { return integral_to(y) - integral_to(x); }
    void toggle(double t);  // insert t when absent, erase it when present
    void negate();
    void rebuild_from(std::size_t pos);
  };

  const std::vector<int>& odd_cells(Species s, int target) const;
  bool collides(const std::vector<int>& links, double t) const;
  // Reference integrals walking the flip lists directly; recompute_action
  // uses these so it stays independent of the prefix sums.
  double walk_spin(int link, double x, double y) const;
  double walk_cell(int cell, double x, double y) const;
  double segment_spin(int link, double x, double y) const;
  double segment_cell(int cell, double x, double y) const;
  void toggle_flip(int link, double t);
  void negate_link(int link);
  double segment_delta(const std::vector<int>& links, const std::vector<int>& cells, double x,
                       double y) const;
  double arc_delta(const std::vector<int>& links, const std::vector<int>& cells, double a,
                   double b) const;
  void register_kink(Species s, int target, double t);
  void unregister_kink(Species s, int target, double t);
  void insert_kink(Species s, int target, double t);
  void erase_kink(Species s, int target, double t);
  double toggle_link_arc(int link, double a, double b);
  void flip_base(const std::vector<int>& links);

  const Lattice* lattice_;
  Basis basis_;
  double beta_;
  Couplings couplings_;

  const std::vector<std::vector<int>>* diag_cells_;
  const std::vector<std::vector<int>>* targets_;
  std::vector<std::vector<int>> single_links_;
  std::vector<std::vector<int>> link_cells_;     // diag cells containing each link
  std::vector<std::vector<int>> target_odd_cells_;
  std::vector<Relation> relations_;
  std::vector<std::vector<int>> sector_sets_;

  std::vector<Line> link_lines_;
  std::vector<Line> cell_lines_;
  std::vector<Kink> kinks_;
  std::vector<std::vector<Timed>> by_target_[2];
  std::size_t count_[2] = {0, 0};
  ExactSum action_;
  mutable std::vector<double> scratch_;
};

}  // namespace toric
