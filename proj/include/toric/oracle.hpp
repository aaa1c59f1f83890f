#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toric/lattice.hpp"
#include "toric/worldline.hpp"

namespace toric::oracle {

inline constexpr int kMaxLinks = 14;

// Bit l of a basis state is 1 when link l carries eigenvalue -1 of the
// simulated Pauli.
struct DenseHamiltonian {
  const Lattice* lattice;
  Couplings couplings;
  Basis basis;
  std::size_t dimension;
  Eigen::MatrixXd matrix;
  std::vector<std::uint32_t> star_masks;
  std::vector<std::uint32_t> plaquette_masks;
};

DenseHamiltonian build_hamiltonian(const Lattice& lattice, const Couplings& couplings,
                                   Basis basis);

// Keys: energy, energy_mu, energy_h, energy_J, energy_lmbda, sigma_x, sigma_z,
// star_x, plaquette_z, delta, sigma_x_susceptibility, sigma_z_susceptibility.
// Densities are per link, per vertex or per plaquette.
std::map<std::string, double> thermal_expectations(const DenseHamiltonian& H, double beta,
                                                   double fd_step = 1e-3);

std::vector<double> eigenvalues(const DenseHamiltonian& H);

// <s| exp(-beta H) |s> / Z over basis states s.
std::vector<double> diagonal_distribution(const DenseHamiltonian& H, double beta);

// Boltzmann weights of the diagonal energy. Only valid when both off-diagonal
// couplings of the basis vanish, where this is the exact distribution.
std::vector<double> classical_boltzmann(const Lattice& lattice, const Couplings& couplings,
                                        Basis basis, double beta);

}  // namespace toric::oracle
