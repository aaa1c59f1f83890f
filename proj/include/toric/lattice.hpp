#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace toric {

enum class LatticeType { square, triangular, honeycomb, cubic };
enum class Boundaries { periodic, open };

using IVec = std::array<int, 3>;

struct Vertex {
  int id;
  IVec cell;
  int sublattice;
};

struct Link {
  int id;
  int tail;
  int head;
  // cell(head) - cell(tail) without periodic wrapping
  IVec displacement;
};

struct Lattice {
  LatticeType lattice_type;
  Boundaries boundaries;
  int L;
  int dim;
  std::vector<Vertex> vertices;
  std::vector<Link> links;
  std::vector<std::vector<int>> stars;
  // each plaquette lists its links in cycle order
  std::vector<std::vector<int>> plaquettes;
  std::vector<IVec> winding_directions;

  // per plaquette: anchor cell, and for each of its links the unwrapped cell
  // of the link tail relative to the anchor (same order as plaquettes[p])
  std::vector<IVec> plaquette_anchor;
  std::vector<std::vector<IVec>> plaquette_link_offset;
  // orientation index within the unit cell (0 for square/honeycomb,
  // 0 up / 1 down for triangular, 0 xy / 1 yz / 2 zx for cubic)
  std::vector<int> plaquette_kind;
  std::vector<std::vector<int>> link_plaquettes;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_links() const { return static_cast<int>(links.size()); }
  int n_plaquettes() const { return static_cast<int>(plaquettes.size()); }
  bool periodic() const { return boundaries == Boundaries::periodic; }

  std::array<double, 3> position(int vertex) const;
};

struct FmLoopPair {
  std::vector<int> half_loop;
  std::vector<int> full_loop;
  int perimeter;
};

Lattice build_lattice(LatticeType lattice_type, int L, Boundaries boundaries);
FmLoopPair build_fm_loops(const Lattice& lattice, int loop_scale);

// Shortest closed link path with winding L along each periodic direction
// (empty for open boundaries).
std::vector<std::vector<int>> winding_cycles(const Lattice& lattice);
// Per direction, the links crossing between cell layers 0 and 1.
std::vector<std::vector<int>> layer_cuts(const Lattice& lattice);

LatticeType parse_lattice_type(std::string_view name);
Boundaries parse_boundaries(std::string_view name);
std::string to_string(LatticeType t);
std::string to_string(Boundaries b);

}  // namespace toric
