#include "toric/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "toric/error.hpp"

namespace toric {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<std::string, Observable>>& name_table() {
  static const std::vector<std::pair<std::string, Observable>> table = {
      {"anyon_count", Observable::anyon_count},
      {"anyon_density", Observable::anyon_density},
      {"delta", Observable::delta},
      {"energy", Observable::energy},
      {"energy_h", Observable::energy_h},
      {"energy_lmbda", Observable::energy_lmbda},
      {"energy_J", Observable::energy_J},
      {"energy_mu", Observable::energy_mu},
      {"fredenhagen_marcu", Observable::fredenhagen_marcu},
      {"largest_cluster", Observable::largest_cluster},
      {"percolation_probability", Observable::percolation_probability},
      {"percolation_strength", Observable::percolation_strength},
      {"plaquette_percolation_probability", Observable::plaquette_percolation_probability},
      {"plaquette_z", Observable::plaquette_z},
      {"sigma_x", Observable::sigma_x},
      {"sigma_x_susceptibility", Observable::sigma_x_susceptibility},
      {"sigma_z", Observable::sigma_z},
      {"sigma_z_susceptibility", Observable::sigma_z_susceptibility},
      {"staggered_imaginary_times", Observable::staggered_imaginary_times},
      {"star_x", Observable::star_x},
      {"string_number", Observable::string_number},
  };
  return table;
}

// Union-find over nodes embedded in the unwrapped cell lattice. offset[x] is
// the position of x relative to its parent.
class OffsetUnionFind {
 public:
  explicit OffsetUnionFind(int n) : parent_(n), offset_(n, IVec{0, 0, 0}), winds_(n, false) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  // Returns the root; pos receives the position of x relative to the root.
  int find(int x, IVec& pos) {
    IVec acc{0, 0, 0};
    int r = x;
    while (parent_[r] != r) {
      for (int d = 0; d < 3; ++d) acc[d] += offset_[r][d];
      r = parent_[r];
    }
    // path compression
    IVec rem = acc;
    int y = x;
    while (parent_[y] != y) {
      int next = parent_[y];
      IVec o = offset_[y];
      parent_[y] = r;
      offset_[y] = rem;
      for (int d = 0; d < 3; ++d) rem[d] -= o[d];
      y = next;
    }
    pos = acc;
    return r;
  }

  // Records an edge with pos(b) - pos(a) = disp. Returns the merged root.
  int unite(int a, int b, const IVec& disp) {
    IVec pa, pb;
    int ra = find(a, pa), rb = find(b, pb);
    if (ra == rb) {
      for (int d = 0; d < 3; ++d)
        if (pb[d] - pa[d] != disp[d]) winds_[ra] = true;
      return ra;
    }
    parent_[rb] = ra;
    for (int d = 0; d < 3; ++d) offset_[rb][d] = pa[d] + disp[d] - pb[d];
    winds_[ra] = winds_[ra] || winds_[rb];
    return ra;
  }

  bool winds(int root) const { return winds_[root]; }

 private:
  std::vector<int> parent_;
  std::vector<IVec> offset_;
  std::vector<bool> winds_;
};

struct Extent {
  IVec lo{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
          std::numeric_limits<int>::max()};
  IVec hi{std::numeric_limits<int>::min(), std::numeric_limits<int>::min(),
          std::numeric_limits<int>::min()};
  void add(const IVec& c) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], c[d]);
      hi[d] = std::max(hi[d], c[d]);
    }
  }
  void merge(const Extent& o) {
    add(o.lo);
    add(o.hi);
  }
  bool spans(const Extent& whole, int dim) const {
    for (int d = 0; d < dim; ++d)
      if (whole.hi[d] > whole.lo[d] && lo[d] == whole.lo[d] && hi[d] == whole.hi[d]) return true;
    return false;
  }
};

}  // namespace

const std::vector<std::string>& observable_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : name_table()) n.push_back(k);
    return n;
  }();
  return names;
}

Observable parse_observable(std::string_view name) {
  for (const auto& [k, v] : name_table())
    if (k == name) return v;
  std::string msg = "unknown observable '" + std::string(name) + "'; valid options:";
  for (const auto& n : observable_names()) msg += " " + n;
  throw ConfigError(msg);
}

std::string to_string(Observable o) {
  for (const auto& [k, v] : name_table())
    if (v == o) return k;
  return "unknown";
}

Snapshot take_snapshot(const Worldline& w) {
  Snapshot s(w.lattice().n_links());
  for (int l = 0; l < w.lattice().n_links(); ++l) s[l] = static_cast<std::int8_t>(w.base_spin(l));
  return s;
}

AnyonStats anyon_stats(const Snapshot& s, const Lattice& lat, Basis basis) {
  const auto& cells = basis == Basis::x ? lat.stars : lat.plaquettes;
  int count = 0;
  for (const auto& c : cells) {
    int prod = 1;
    for (int l : c) prod *= s[l];
    if (prod < 0) ++count;
  }
  return {count, cells.empty() ? 0.0 : static_cast<double>(count) / cells.size()};
}

StringField string_and_field(const Snapshot& s, const Worldline& w) {
  int n = static_cast<int>(std::count(s.begin(), s.end(), -1));
  double m = w.magnetization_integral() / (w.beta() * w.lattice().n_links());
  return {n, m};
}

Stabilizers stabilizer_estimators(const Worldline& w) {
  const double diag =
      w.cell_sum_integral() / (w.beta() * static_cast<double>(w.diag_cells().size()));
  const double g = w.interaction_coupling();
  const double n_targets = static_cast<double>(w.interaction_targets().size());
  const double off = g > 0.0 && n_targets > 0
                         ? static_cast<double>(w.n_kinks(Species::interaction)) /
                               (w.beta() * g * n_targets)
                         : kNaN;
  Stabilizers st{};
  if (w.basis() == Basis::x) {
    st.star_x = diag;
    st.plaquette_z = off;
  } else {
    st.star_x = off;
    st.plaquette_z = diag;
  }
  st.delta = st.star_x - st.plaquette_z;
  return st;
}

Energies energy_estimators(const Worldline& w) {
  const double beta = w.beta();
  const double e_sigma = -w.diag_field_coupling() * w.magnetization_integral() / beta;
  const double e_cell = -w.diag_cell_coupling() * w.cell_sum_integral() / beta;
  const double e_field = -static_cast<double>(w.n_kinks(Species::field)) / beta;
  const double e_inter = -static_cast<double>(w.n_kinks(Species::interaction)) / beta;
  Energies e{};
  if (w.basis() == Basis::x) {
    e.energy_h = e_sigma;
    e.energy_mu = e_cell;
    e.energy_lmbda = e_field;
    e.energy_J = e_inter;
  } else {
    e.energy_lmbda = e_sigma;
    e.energy_J = e_cell;
    e.energy_h = e_field;
    e.energy_mu = e_inter;
  }
  e.energy = e.energy_mu + e.energy_h + e.energy_J + e.energy_lmbda;
  return e;
}

Percolation percolation_analysis(const Snapshot& s, const Lattice& lat) {
  const int nv = lat.n_vertices();
  OffsetUnionFind uf(nv);
  for (const Link& l : lat.links)
    if (s[l.id] < 0) uf.unite(l.tail, l.head, l.displacement);

  std::vector<int> size(nv, 0);
  std::vector<Extent> extent(nv);
  IVec pos;
  for (const Link& l : lat.links) {
    if (s[l.id] >= 0) continue;
    int r = uf.find(l.tail, pos);
    ++size[r];
    extent[r].add(lat.vertices[l.tail].cell);
    extent[r].add(lat.vertices[l.head].cell);
  }
  Extent whole;
  for (const Vertex& v : lat.vertices) whole.add(v.cell);

  Percolation p{0, 0, 0.0};
  for (int r = 0; r < nv; ++r) {
    if (size[r] == 0) continue;
    p.largest_cluster = std::max(p.largest_cluster, size[r]);
    bool perc = lat.periodic() ? uf.winds(r) : extent[r].spans(whole, lat.dim);
    if (perc) p.indicator = 1;
  }
  p.strength = p.indicator ? static_cast<double>(p.largest_cluster) / lat.n_links() : 0.0;
  return p;
}

int plaquette_percolation(const Snapshot& s, const Lattice& lat) {
  const int np = lat.n_plaquettes();
  if (np == 0) return 0;
  // index of each link inside each of its plaquettes
  auto offset_in = [&](int p, int l) -> const IVec& {
    const auto& links = lat.plaquettes[p];
    auto idx = std::find(links.begin(), links.end(), l) - links.begin();
    return lat.plaquette_link_offset[p][idx];
  };
  OffsetUnionFind uf(np);
  std::vector<bool> touched(np, false);
  for (const Link& l : lat.links) {
    if (s[l.id] >= 0) continue;
    const auto& ps = lat.link_plaquettes[l.id];
    if (ps.size() < 2) continue;
    const int p0 = ps[0];
    const IVec& r0 = offset_in(p0, l.id);
    for (std::size_t i = 1; i < ps.size(); ++i) {
      const IVec& ri = offset_in(ps[i], l.id);
      uf.unite(p0, ps[i], IVec{r0[0] - ri[0], r0[1] - ri[1], r0[2] - ri[2]});
      touched[ps[i]] = true;
    }
    touched[p0] = true;
  }
  if (lat.periodic()) {
    IVec pos;
    for (int p = 0; p < np; ++p)
      if (touched[p] && uf.winds(uf.find(p, pos))) return 1;
    return 0;
  }
  Extent whole;
  for (const IVec& a : lat.plaquette_anchor) whole.add(a);
  std::vector<Extent> extent(np);
  IVec pos;
  for (int p = 0; p < np; ++p)
    if (touched[p]) extent[uf.find(p, pos)].add(lat.plaquette_anchor[p]);
  for (int p = 0; p < np; ++p)
    if (touched[p] && uf.find(p, pos) == p && extent[p].spans(whole, lat.dim)) return 1;
  return 0;
}

LoopTerms fredenhagen_marcu_terms(const Snapshot& s, const FmLoopPair& loops) {
  int half = 1, full = 1;
  for (int l : loops.half_loop) half *= s[l];
  for (int l : loops.full_loop) full *= s[l];
  return {half, full};
}

double fredenhagen_marcu_ratio(double mean_half, double mean_full) {
  if (mean_full == 0.0 || !std::isfinite(mean_full)) return kNaN;
  return mean_half / std::sqrt(std::abs(mean_full));
}

int default_fm_loop_scale(const Lattice& lat) { return std::max(1, lat.L / 4); }

double staggered_imaginary_times(const Worldline& w) {
  const int nt = w.n_targets(Species::interaction);
  if (nt == 0) return kNaN;
  const double beta = w.beta();
  double acc = 0.0;
  for (int k = 0; k < nt; ++k) {
    const auto times = w.kink_times(Species::interaction, k);
    double s = 0.0, prev = 0.0, sign = 1.0;
    for (double t : times) {
      s += sign * (t - prev);
      prev = t;
      sign = -sign;
    }
    s += sign * (beta - prev);
    acc += std::abs(s / beta);
  }
  return acc / nt;
}

SusceptibilityPrimitives susceptibility_primitives(const Worldline& w) {
  return {w.magnetization_integral(), static_cast<double>(w.n_kinks(Species::field)),
          static_cast<double>(w.n_kinks(Species::interaction))};
}

double chi_diagonal(double mean_M, double mean_M2, double beta, int n_links) {
  return (mean_M2 - mean_M * mean_M) / (beta * n_links);
}

double chi_offdiagonal(double mean_n, double mean_n2, double beta, double g, int n_links) {
  if (!(g > 0.0)) return kNaN;
  return (mean_n2 - mean_n * mean_n - mean_n) / (beta * g * g * n_links);
}

bool is_series_functional(Observable o) {
  return o == Observable::fredenhagen_marcu || o == Observable::sigma_x_susceptibility ||
         o == Observable::sigma_z_susceptibility;
}

Measurer::Measurer(const Lattice& lat, std::vector<Observable> observables)
    : lat_(&lat), obs_(std::move(observables)) {
  if (std::find(obs_.begin(), obs_.end(), Observable::fredenhagen_marcu) != obs_.end()) {
    loops_ = build_fm_loops(lat, default_fm_loop_scale(lat));
    has_loops_ = true;
  }
}

void Measurer::measure(const Worldline& w, std::vector<double>& values, double* fm_full) const {
  values.assign(obs_.size(), kNaN);
  const Snapshot snap = take_snapshot(w);
  bool have_perc = false, have_energy = false, have_stab = false, have_M = false;
  Percolation perc{};
  Energies en{};
  Stabilizers st{};
  double M = 0.0;
  auto need_M = [&] {
    if (!have_M) M = w.magnetization_integral();
    have_M = true;
    return M;
  };
  auto need_perc = [&]() -> const Percolation& {
    if (!have_perc) perc = percolation_analysis(snap, *lat_);
    have_perc = true;
    return perc;
  };
  auto need_energy = [&]() -> const Energies& {
    if (!have_energy) en = energy_estimators(w);
    have_energy = true;
    return en;
  };
  auto need_stab = [&]() -> const Stabilizers& {
    if (!have_stab) st = stabilizer_estimators(w);
    have_stab = true;
    return st;
  };
  const double beta = w.beta();
  const double nl = lat_->n_links();
  const bool bx = w.basis() == Basis::x;
  const double n_field = static_cast<double>(w.n_kinks(Species::field));
  const double g_field = w.field_coupling();
  auto offdiag_sigma = [&] { return g_field > 0.0 ? n_field / (beta * g_field * nl) : kNaN; };

  for (std::size_t i = 0; i < obs_.size(); ++i) {
    double& v = values[i];
    switch (obs_[i]) {
      case Observable::anyon_count: v = anyon_stats(snap, *lat_, w.basis()).count; break;
      case Observable::anyon_density: v = anyon_stats(snap, *lat_, w.basis()).density; break;
      case Observable::delta: v = need_stab().delta; break;
      case Observable::energy: v = need_energy().energy; break;
      case Observable::energy_h: v = need_energy().energy_h; break;
      case Observable::energy_lmbda: v = need_energy().energy_lmbda; break;
      case Observable::energy_J: v = need_energy().energy_J; break;
      case Observable::energy_mu: v = need_energy().energy_mu; break;
      case Observable::fredenhagen_marcu: {
        LoopTerms t = fredenhagen_marcu_terms(snap, loops_);
        v = t.W_half;
        if (fm_full) *fm_full = t.W_full;
        break;
      }
      case Observable::largest_cluster: v = need_perc().largest_cluster; break;
      case Observable::percolation_probability: v = need_perc().indicator; break;
      case Observable::percolation_strength: v = need_perc().strength; break;
      case Observable::plaquette_percolation_probability:
        v = plaquette_percolation(snap, *lat_);
        break;
      case Observable::plaquette_z: v = need_stab().plaquette_z; break;
      case Observable::star_x: v = need_stab().star_x; break;
      case Observable::sigma_x: v = bx ? need_M() / (beta * nl) : offdiag_sigma(); break;
      case Observable::sigma_z: v = bx ? offdiag_sigma() : need_M() / (beta * nl); break;
      case Observable::sigma_x_susceptibility: v = bx ? need_M() : n_field; break;
      case Observable::sigma_z_susceptibility: v = bx ? n_field : need_M(); break;
      case Observable::staggered_imaginary_times: v = staggered_imaginary_times(w); break;
      case Observable::string_number:
        v = static_cast<double>(std::count(snap.begin(), snap.end(), -1));
        break;
    }
  }
}

}  // namespace toric
