#include "toric/oracle.hpp"

#include <bit>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "toric/error.hpp"

namespace toric::oracle {

namespace {

std::uint32_t mask_of(const std::vector<int>& links) {
  std::uint32_t m = 0;
  for (int l : links) m |= 1u << l;
  return m;
}

double stabilizer(std::uint32_t state, std::uint32_t mask) {
  return (std::popcount(state & mask) & 1) ? -1.0 : 1.0;
}

double sigma_sum(std::uint32_t state, int n_links) {
  return n_links - 2.0 * std::popcount(state);
}

// Expectations of the extensive operators in the simulated basis.
struct Totals {
  double sum_diag_sigma = 0;  // sum of the diagonal Pauli over links
  double sum_off_sigma = 0;   // sum of the off-diagonal Pauli over links
  double sum_diag_cell = 0;   // stars (x) or plaquettes (z)
  double sum_off_cell = 0;    // plaquettes (x) or stars (z)
};

Totals totals(const DenseHamiltonian& H, double beta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix);
  const Eigen::VectorXd& E = es.eigenvalues();
  const Eigen::MatrixXd& V = es.eigenvectors();
  const std::size_t dim = H.dimension;
  const int nl = H.lattice->n_links();

  Eigen::VectorXd w = (-beta * (E.array() - E.minCoeff())).exp();
  const double Z = w.sum();

  const auto& diag_masks = H.basis == Basis::x ? H.star_masks : H.plaquette_masks;
  const auto& off_masks = H.basis == Basis::x ? H.plaquette_masks : H.star_masks;

  Eigen::VectorXd d_sigma(dim), d_cell(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    auto st = static_cast<std::uint32_t>(s);
    d_sigma[s] = sigma_sum(st, nl);
    double c = 0;
    for (auto m : diag_masks) c += stabilizer(st, m);
    d_cell[s] = c;
  }
  Eigen::MatrixXd V2 = V.array().square();
  Eigen::VectorXd o_sigma = V2.transpose() * d_sigma;
  Eigen::VectorXd o_cell = V2.transpose() * d_cell;

  auto flip_expectation = [&](std::uint32_t mask) {
    Eigen::MatrixXd P(dim, dim);
    for (std::size_t s = 0; s < dim; ++s) P.row(s) = V.row(s ^ mask);
    return Eigen::VectorXd(V.cwiseProduct(P).colwise().sum().transpose());
  };
  Eigen::VectorXd o_off_sigma = Eigen::VectorXd::Zero(dim);
  for (int l = 0; l < nl; ++l) o_off_sigma += flip_expectation(1u << l);
  Eigen::VectorXd o_off_cell = Eigen::VectorXd::Zero(dim);
  for (auto m : off_masks) o_off_cell += flip_expectation(m);

  Totals t;
  t.sum_diag_sigma = w.dot(o_sigma) / Z;
  t.sum_diag_cell = w.dot(o_cell) / Z;
  t.sum_off_sigma = w.dot(o_off_sigma) / Z;
  t.sum_off_cell = w.dot(o_off_cell) / Z;
  return t;
}

double sum_sigma_x(const Totals& t, Basis b) {
  return b == Basis::x ? t.sum_diag_sigma : t.sum_off_sigma;
}
double sum_sigma_z(const Totals& t, Basis b) {
  return b == Basis::x ? t.sum_off_sigma : t.sum_diag_sigma;
}

}  // namespace

DenseHamiltonian build_hamiltonian(const Lattice& lattice, const Couplings& c, Basis basis) {
  const int nl = lattice.n_links();
  if (nl > kMaxLinks)
    throw ConfigError("exact diagonalization supports at most " + std::to_string(kMaxLinks) +
                      " links, lattice has " + std::to_string(nl));
  DenseHamiltonian H{&lattice, c, basis, std::size_t{1} << nl, {}, {}, {}};
  for (const auto& s : lattice.stars) H.star_masks.push_back(mask_of(s));
  for (const auto& p : lattice.plaquettes) H.plaquette_masks.push_back(mask_of(p));

  const bool bx = basis == Basis::x;
  const double g_diag_sigma = bx ? c.h : c.lmbda;
  const double g_diag_cell = bx ? c.mu : c.J;
  const double g_off_sigma = bx ? c.lmbda : c.h;
  const double g_off_cell = bx ? c.J : c.mu;
  const auto& diag_masks = bx ? H.star_masks : H.plaquette_masks;
  const auto& off_masks = bx ? H.plaquette_masks : H.star_masks;

  const std::size_t dim = H.dimension;
  H.matrix = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t s = 0; s < dim; ++s) {
    auto st = static_cast<std::uint32_t>(s);
    double e = -g_diag_sigma * sigma_sum(st, nl);
    for (auto m : diag_masks) e -= g_diag_cell * stabilizer(st, m);
    H.matrix(s, s) = e;
    for (int l = 0; l < nl; ++l) H.matrix(s, s ^ (1u << l)) -= g_off_sigma;
    for (auto m : off_masks) H.matrix(s, s ^ m) -= g_off_cell;
  }
  return H;
}

std::vector<double> eigenvalues(const DenseHamiltonian& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix, Eigen::EigenvaluesOnly);
  const auto& e = es.eigenvalues();
  return {e.data(), e.data() + e.size()};
}

std::map<std::string, double> thermal_expectations(const DenseHamiltonian& H, double beta,
                                                   double fd_step) {
  const Lattice& lat = *H.lattice;
  const Couplings& c = H.couplings;
  const Basis b = H.basis;
  const Totals t = totals(H, beta);
  const double nl = lat.n_links(), nv = lat.n_vertices(), np = lat.n_plaquettes();

  const double sum_A = b == Basis::x ? t.sum_diag_cell : t.sum_off_cell;
  const double sum_B = b == Basis::x ? t.sum_off_cell : t.sum_diag_cell;

  std::map<std::string, double> out;
  out["energy_mu"] = -c.mu * sum_A;
  out["energy_J"] = -c.J * sum_B;
  out["energy_h"] = -c.h * sum_sigma_x(t, b);
  out["energy_lmbda"] = -c.lmbda * sum_sigma_z(t, b);
  out["energy"] = out["energy_mu"] + out["energy_J"] + out["energy_h"] + out["energy_lmbda"];
  out["sigma_x"] = sum_sigma_x(t, b) / nl;
  out["sigma_z"] = sum_sigma_z(t, b) / nl;
  out["star_x"] = sum_A / nv;
  out["plaquette_z"] = np > 0 ? sum_B / np : 0.0;
  out["delta"] = out["star_x"] - out["plaquette_z"];

  auto shifted = [&](double dh, double dl) {
    Couplings cc = c;
    cc.h += dh;
    cc.lmbda += dl;
    return totals(build_hamiltonian(lat, cc, b), beta);
  };
  out["sigma_x_susceptibility"] =
      (sum_sigma_x(shifted(fd_step, 0), b) - sum_sigma_x(shifted(-fd_step, 0), b)) /
      (2 * fd_step * nl);
  out["sigma_z_susceptibility"] =
      (sum_sigma_z(shifted(0, fd_step), b) - sum_sigma_z(shifted(0, -fd_step), b)) /
      (2 * fd_step * nl);
  return out;
}

std::vector<double> diagonal_distribution(const DenseHamiltonian& H, double beta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix);
  const Eigen::VectorXd& E = es.eigenvalues();
  Eigen::VectorXd w = (-beta * (E.array() - E.minCoeff())).exp();
  Eigen::VectorXd p = es.eigenvectors().array().square().matrix() * w;
  p /= p.sum();
  return {p.data(), p.data() + p.size()};
}

std::vector<double> classical_boltzmann(const Lattice& lattice, const Couplings& c, Basis basis,
                                        double beta) {
  const bool bx = basis == Basis::x;
  const double off_sigma = bx ? c.lmbda : c.h;
  const double off_cell = bx ? c.J : c.mu;
  if (off_sigma != 0.0 || off_cell != 0.0)
    throw ConfigError(
        "classical_boltzmann requires both off-diagonal couplings of the basis to vanish");
  const int nl = lattice.n_links();
  if (nl > kMaxLinks) throw ConfigError("too many links for exhaustive enumeration");
  const auto& cells = bx ? lattice.stars : lattice.plaquettes;
  std::vector<std::uint32_t> masks;
  for (const auto& cell : cells) masks.push_back(mask_of(cell));
  const double g_sigma = bx ? c.h : c.lmbda;
  const double g_cell = bx ? c.mu : c.J;

  const std::size_t dim = std::size_t{1} << nl;
  std::vector<double> e(dim);
  double e_min = INFINITY;
  for (std::size_t s = 0; s < dim; ++s) {
    auto st = static_cast<std::uint32_t>(s);
    double v = -g_sigma * sigma_sum(st, nl);
    for (auto m : masks) v -= g_cell * stabilizer(st, m);
    e[s] = v;
    e_min = std::min(e_min, v);
  }
  double z = 0;
  for (auto& v : e) {
    v = std::exp(-beta * (v - e_min));
    z += v;
  }
  for (auto& v : e) v /= z;
  return e;
}

}  // namespace toric::oracle
